#include "advlab/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "advlab/errors.hpp"
#include "advlab/rng.hpp"

namespace advlab {

namespace {

std::uint32_t read_be_u32(const std::string& bytes, std::size_t offset, const char* what) {
    if (offset + 4 > bytes.size())
        throw ParseError(std::string("idx: truncated while reading ") + what, offset);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v = (v << 8) | static_cast<std::uint8_t>(bytes[offset + i]);
    return v;
}

void write_be_u32(std::string& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint8_t pixel_to_byte(float p) {
    return static_cast<std::uint8_t>(std::lround(p * 255.0f));
}

} // namespace

Dataset parse_idx(const std::string& images_bytes, const std::string& labels_bytes,
                  const std::string& provenance) {
    if (images_bytes.empty()) throw ParseError("idx: empty image stream", 0);
    if (labels_bytes.empty()) throw ParseError("idx: empty label stream", 0);

    const std::uint32_t img_magic = read_be_u32(images_bytes, 0, "image magic");
    if (img_magic != 0x00000803u)
        throw ParseError("idx: bad image magic, expected 00000803", 0);
    const std::uint32_t n = read_be_u32(images_bytes, 4, "image count");
    const std::uint32_t h = read_be_u32(images_bytes, 8, "image height");
    const std::uint32_t w = read_be_u32(images_bytes, 12, "image width");
    const std::size_t payload = static_cast<std::size_t>(n) * h * w;
    if (images_bytes.size() < 16 + payload)
        throw ParseError("idx: truncated image payload", images_bytes.size());
    if (images_bytes.size() > 16 + payload)
        throw ParseError("idx: trailing bytes after image payload", 16 + payload);

    const std::uint32_t lbl_magic = read_be_u32(labels_bytes, 0, "label magic");
    if (lbl_magic != 0x00000801u)
        throw ParseError("idx: bad label magic, expected 00000801", 0);
    const std::uint32_t ln = read_be_u32(labels_bytes, 4, "label count");
    if (ln != n) throw ParseError("idx: image/label count mismatch", 4);
    if (labels_bytes.size() < 8 + ln)
        throw ParseError("idx: truncated label payload", labels_bytes.size());
    if (labels_bytes.size() > 8 + ln)
        throw ParseError("idx: trailing bytes after label payload", 8 + static_cast<std::size_t>(ln));
    if (h == 0 || w == 0) throw ParseError("idx: zero image dimension", 8);

    Dataset ds;
    ds.provenance = provenance;
    ds.records.reserve(n);
    int max_label = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        ImageRecord rec;
        rec.pixels = TensorF({1, static_cast<int>(h), static_cast<int>(w)});
        const std::size_t base = 16 + static_cast<std::size_t>(i) * h * w;
        for (std::size_t k = 0; k < static_cast<std::size_t>(h) * w; ++k)
            rec.pixels.data[k] = static_cast<std::uint8_t>(images_bytes[base + k]) / 255.0f;
        rec.label = static_cast<std::uint8_t>(labels_bytes[8 + i]);
        max_label = std::max(max_label, rec.label);
        ds.records.push_back(std::move(rec));
    }
    ds.num_classes = max_label + 1; // smallest K consistent with the labels seen
    return ds;
}

std::string serialize_idx_images(const Dataset& ds) {
    if (ds.records.empty()) throw std::invalid_argument("serialize_idx_images: empty dataset");
    const std::vector<int>& shape = ds.records[0].pixels.shape;
    if (shape[0] != 1) throw std::invalid_argument("serialize_idx_images: idx images need C=1");
    std::string out;
    write_be_u32(out, 0x00000803u);
    write_be_u32(out, static_cast<std::uint32_t>(ds.records.size()));
    write_be_u32(out, static_cast<std::uint32_t>(shape[1]));
    write_be_u32(out, static_cast<std::uint32_t>(shape[2]));
    for (const ImageRecord& rec : ds.records)
        for (float p : rec.pixels.data) out.push_back(static_cast<char>(pixel_to_byte(p)));
    return out;
}

std::string serialize_idx_labels(const Dataset& ds) {
    std::string out;
    write_be_u32(out, 0x00000801u);
    write_be_u32(out, static_cast<std::uint32_t>(ds.records.size()));
    for (const ImageRecord& rec : ds.records) out.push_back(static_cast<char>(rec.label));
    return out;
}

Dataset parse_cifar10(const std::string& bytes, const std::string& provenance) {
    constexpr std::size_t kRecord = 3073;
    if (bytes.size() % kRecord != 0)
        throw ParseError("cifar10: byte length is not a multiple of 3073",
                         bytes.size() - bytes.size() % kRecord);
    const std::size_t n = bytes.size() / kRecord;
    Dataset ds;
    ds.provenance = provenance;
    ds.num_classes = 10;
    ds.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t base = i * kRecord;
        const std::uint8_t label = static_cast<std::uint8_t>(bytes[base]);
        if (label > 9) throw ParseError("cifar10: label byte exceeds 9", base);
        ImageRecord rec;
        rec.label = label;
        rec.pixels = TensorF({3, 32, 32});
        for (std::size_t k = 0; k < 3072; ++k)
            rec.pixels.data[k] = static_cast<std::uint8_t>(bytes[base + 1 + k]) / 255.0f;
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

std::string serialize_cifar10(const Dataset& ds) {
    std::string out;
    out.reserve(ds.records.size() * 3073);
    for (const ImageRecord& rec : ds.records) {
        if (rec.pixels.shape != std::vector<int>{3, 32, 32})
            throw std::invalid_argument("serialize_cifar10: records must be 3x32x32");
        out.push_back(static_cast<char>(rec.label));
        for (float p : rec.pixels.data) out.push_back(static_cast<char>(pixel_to_byte(p)));
    }
    return out;
}

TargetAssignment assign_targets(const Dataset& ds, std::uint64_t seed) {
    if (ds.num_classes < 2)
        throw std::invalid_argument("assign_targets: need at least 2 classes");
    TargetAssignment ta;
    ta.seed = seed;
    ta.targets.resize(ds.records.size());
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        RngStream rng = RngStream::keyed(seed, static_cast<int>(i), 0, "target");
        const int r = rng.uniform_int(0, ds.num_classes - 2);
        ta.targets[i] = r >= ds.records[i].label ? r + 1 : r;
    }
    return ta;
}

std::vector<int> eval_subset_indices(int dataset_size, int subset_size, std::uint64_t seed) {
    if (dataset_size < 0 || subset_size < 0 || subset_size > dataset_size)
        throw std::invalid_argument("eval_subset_indices: bad sizes");
    std::vector<int> perm(dataset_size);
    for (int i = 0; i < dataset_size; ++i) perm[i] = i;
    RngStream rng = RngStream::keyed(seed, 0, 0, "eval-subset");
    for (int i = dataset_size - 1; i > 0; --i) {
        const int j = rng.uniform_int(0, i);
        std::swap(perm[i], perm[j]);
    }
    perm.resize(subset_size);
    return perm;
}

Dataset take_subset(const Dataset& ds, const std::vector<int>& indices) {
    Dataset out;
    out.num_classes = ds.num_classes;
    out.provenance = ds.provenance + "[subset]";
    out.records.reserve(indices.size());
    for (int i : indices) {
        if (i < 0 || i >= static_cast<int>(ds.records.size()))
            throw std::invalid_argument("take_subset: index out of range");
        out.records.push_back(ds.records[i]);
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open file: " + path, 0);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& bytes) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open file for writing: " + path);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("failed writing file: " + path);
}

std::string resolve_data_path(const std::string& name) {
    if (std::filesystem::exists(name)) return name;
    if (const char* root = std::getenv("ADVLAB_DATA_DIR")) {
        const std::filesystem::path joined = std::filesystem::path(root) / name;
        if (std::filesystem::exists(joined)) return joined.string();
    }
    return name; // let the subsequent open fail with a clear message
}

} // namespace advlab
