#include "advlab/model.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "advlab/errors.hpp"

namespace advlab {

namespace {

LayerSpec conv(int out_c, int kernel, int pad) {
    LayerSpec l;
    l.kind = LayerKind::Conv2d;
    l.out_channels = out_c;
    l.kernel = kernel;
    l.stride = 1;
    l.pad = pad;
    return l;
}

LayerSpec plain(LayerKind k) {
    LayerSpec l;
    l.kind = k;
    return l;
}

LayerSpec dense(int out_features) {
    LayerSpec l;
    l.kind = LayerKind::Dense;
    l.out_features = out_features;
    return l;
}

LayerSpec add_skip(int from) {
    LayerSpec l;
    l.kind = LayerKind::AddSkip;
    l.skip_from = from;
    return l;
}

} // namespace

ModelSpec make_model_spec(const std::string& architecture, int num_classes,
                          const std::vector<int>& input_shape) {
    if (num_classes < 2) throw std::invalid_argument("make_model_spec: need at least 2 classes");
    if (input_shape.size() != 3)
        throw std::invalid_argument("make_model_spec: input shape must be CxHxW");
    ModelSpec s;
    s.architecture = architecture;
    s.input_shape = input_shape;
    s.num_classes = num_classes;
    if (architecture == "ConvNetA") {
        // four conv-relu-maxpool stages, tap after each pool
        s.layers = {
            conv(8, 3, 1),  plain(LayerKind::Relu), plain(LayerKind::MaxPool2),
            conv(16, 3, 1), plain(LayerKind::Relu), plain(LayerKind::MaxPool2),
            conv(32, 3, 1), plain(LayerKind::Relu), plain(LayerKind::MaxPool2),
            conv(32, 3, 1), plain(LayerKind::Relu), plain(LayerKind::MaxPool2),
            plain(LayerKind::Flatten), dense(num_classes),
        };
        s.taps = {2, 5, 8, 11};
    } else if (architecture == "ConvNetB") {
        // six thinner convs, 3x3 and 5x5 mixed, average pooling
        s.layers = {
            conv(8, 3, 1),  plain(LayerKind::Relu), plain(LayerKind::AvgPool2),
            conv(12, 5, 2), plain(LayerKind::Relu),
            conv(12, 3, 1), plain(LayerKind::Relu), plain(LayerKind::AvgPool2),
            conv(16, 3, 1), plain(LayerKind::Relu), plain(LayerKind::AvgPool2),
            conv(20, 5, 2), plain(LayerKind::Relu),
            conv(24, 3, 1), plain(LayerKind::Relu), plain(LayerKind::AvgPool2),
            plain(LayerKind::Flatten), dense(num_classes),
        };
        s.taps = {2, 7, 10, 15};
    } else if (architecture == "MiniResNet") {
        // stem + four residual blocks with maxpool/conv transitions between
        s.layers = {
            /*0*/ conv(8, 3, 1), /*1*/ plain(LayerKind::Relu), /*2*/ plain(LayerKind::MaxPool2),
            /*3*/ conv(8, 3, 1), /*4*/ plain(LayerKind::Relu), /*5*/ conv(8, 3, 1),
            /*6*/ add_skip(2), /*7*/ plain(LayerKind::Relu),
            /*8*/ plain(LayerKind::MaxPool2), /*9*/ conv(16, 3, 1), /*10*/ plain(LayerKind::Relu),
            /*11*/ conv(16, 3, 1), /*12*/ plain(LayerKind::Relu), /*13*/ conv(16, 3, 1),
            /*14*/ add_skip(10), /*15*/ plain(LayerKind::Relu),
            /*16*/ plain(LayerKind::MaxPool2), /*17*/ conv(24, 3, 1), /*18*/ plain(LayerKind::Relu),
            /*19*/ conv(24, 3, 1), /*20*/ plain(LayerKind::Relu), /*21*/ conv(24, 3, 1),
            /*22*/ add_skip(18), /*23*/ plain(LayerKind::Relu),
            /*24*/ plain(LayerKind::MaxPool2), /*25*/ conv(32, 3, 1), /*26*/ plain(LayerKind::Relu),
            /*27*/ conv(32, 3, 1), /*28*/ plain(LayerKind::Relu), /*29*/ conv(32, 3, 1),
            /*30*/ add_skip(26), /*31*/ plain(LayerKind::Relu),
            /*32*/ plain(LayerKind::Flatten), /*33*/ dense(num_classes),
        };
        s.taps = {7, 15, 23, 31};
    } else {
        throw std::invalid_argument("make_model_spec: unknown architecture '" + architecture + "'");
    }
    infer_shapes(s); // validate against the input shape
    return s;
}

std::vector<std::vector<int>> infer_shapes(const ModelSpec& spec) {
    if (spec.layers.empty()) throw std::invalid_argument("infer_shapes: empty layer list");
    std::vector<std::vector<int>> shapes(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& ls = spec.layers[i];
        const std::vector<int>& in = (i == 0) ? spec.input_shape : shapes[i - 1];
        switch (ls.kind) {
            case LayerKind::Conv2d: {
                if (in.size() != 3) throw std::invalid_argument("infer_shapes: conv input not CxHxW");
                const int oh = conv_out_dim(in[1], ls.kernel, ls.stride, ls.pad);
                const int ow = conv_out_dim(in[2], ls.kernel, ls.stride, ls.pad);
                if (oh < 1 || ow < 1)
                    throw std::invalid_argument("infer_shapes: conv output collapsed");
                shapes[i] = {ls.out_channels, oh, ow};
                break;
            }
            case LayerKind::Relu:
                shapes[i] = in;
                break;
            case LayerKind::MaxPool2:
            case LayerKind::AvgPool2:
                if (in.size() != 3 || in[1] % 2 != 0 || in[2] % 2 != 0)
                    throw std::invalid_argument("infer_shapes: pool needs even CxHxW input");
                shapes[i] = {in[0], in[1] / 2, in[2] / 2};
                break;
            case LayerKind::Dense:
                shapes[i] = {ls.out_features};
                break;
            case LayerKind::Flatten:
                shapes[i] = {static_cast<int>(TensorF::checked_numel(in))};
                break;
            case LayerKind::AddSkip: {
                if (ls.skip_from == kNoSkip || ls.skip_from >= static_cast<int>(i))
                    throw std::invalid_argument("infer_shapes: add-skip source out of range");
                const std::vector<int>& other =
                    (ls.skip_from == kSkipFromInput) ? spec.input_shape : shapes[ls.skip_from];
                if (other != in)
                    throw std::invalid_argument("infer_shapes: add-skip operand shapes differ");
                shapes[i] = in;
                break;
            }
        }
    }
    const std::vector<int>& last = shapes.back();
    if (last.size() != 1 || last[0] != spec.num_classes)
        throw std::invalid_argument("infer_shapes: final layer must emit num_classes logits");
    for (int t : spec.taps)
        if (t < 0 || t >= static_cast<int>(spec.layers.size()))
            throw std::invalid_argument("infer_shapes: tap index out of range");
    for (int k = 1; k < 4; ++k)
        if (spec.taps[k] <= spec.taps[k - 1])
            throw std::invalid_argument("infer_shapes: taps must be strictly increasing");
    return shapes;
}

// ---------------------------------------------------------------------------
// Checkpoint container: "AVLB", version u16, spec fingerprint u64, then
// repeated {name_len u32, name, ndim u32, dims u32*ndim, f32 payload}.
// All integers and floats little-endian.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'A', 'V', 'L', 'B'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    std::string context;

    void need(std::size_t n) {
        if (pos + n > buf.size())
            throw CheckpointError("checkpoint truncated while reading " + context);
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) |
                          (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos + 1])) << 8);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() {
        std::uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
};

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string canonical_spec_string(const ModelSpec& spec) {
    std::ostringstream os;
    os << spec.architecture << '|' << spec.num_classes << '|';
    for (int d : spec.input_shape) os << d << ',';
    os << '|';
    for (const LayerSpec& l : spec.layers)
        os << layer_kind_name(l.kind) << ':' << l.out_channels << ':' << l.kernel << ':' << l.stride
           << ':' << l.pad << ':' << l.out_features << ':' << l.skip_from << ';';
    os << '|';
    for (int t : spec.taps) os << t << ',';
    return os.str();
}

} // namespace

std::uint64_t spec_fingerprint(const ModelSpec& spec) {
    return fnv1a64(canonical_spec_string(spec));
}

void save_checkpoint(const Model& m, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    put_u16(out, kVersion);
    put_u64(out, spec_fingerprint(m.spec));
    char namebuf[32];
    for (std::size_t i = 0; i < m.spec.layers.size(); ++i) {
        if (m.weights[i].data.empty()) continue;
        for (int part = 0; part < 2; ++part) {
            std::snprintf(namebuf, sizeof(namebuf), "layer%zu.%s", i,
                          part == 0 ? "weight" : "bias");
            const std::string name(namebuf);
            put_u32(out, static_cast<std::uint32_t>(name.size()));
            out.append(name);
            if (part == 0) {
                put_u32(out, static_cast<std::uint32_t>(m.weights[i].shape.size()));
                for (int d : m.weights[i].shape) put_u32(out, static_cast<std::uint32_t>(d));
                for (float v : m.weights[i].data) put_f32(out, v);
            } else {
                put_u32(out, 1);
                put_u32(out, static_cast<std::uint32_t>(m.biases[i].size()));
                for (float v : m.biases[i]) put_f32(out, v);
            }
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot open checkpoint for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw CheckpointError("failed writing checkpoint: " + path);
}

Model load_checkpoint(const std::string& path, const ModelSpec& expected_spec) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{buf};
    r.context = "header";
    r.need(4);
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw CheckpointError("bad checkpoint magic in " + path);
    r.pos = 4;
    const std::uint16_t version = r.u16();
    if (version != kVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t fp = r.u64();
    if (fp != spec_fingerprint(expected_spec))
        throw CheckpointError("checkpoint fingerprint does not match expected spec '" +
                              expected_spec.architecture + "'");

    Model m;
    m.spec = expected_spec;
    auto shapes = infer_shapes(m.spec);
    m.weights.resize(m.spec.layers.size());
    m.biases.resize(m.spec.layers.size());

    while (r.pos < buf.size()) {
        r.context = "record name";
        const std::uint32_t name_len = r.u32();
        r.need(name_len);
        const std::string name = buf.substr(r.pos, name_len);
        r.pos += name_len;
        r.context = "array '" + name + "'";
        const std::uint32_t ndim = r.u32();
        std::vector<int> dims(ndim);
        std::uint64_t count = 1;
        for (auto& d : dims) {
            d = static_cast<int>(r.u32());
            count *= static_cast<std::uint64_t>(d);
        }
        std::vector<float> payload(count);
        for (auto& v : payload) v = r.f32();

        std::size_t layer = 0;
        bool is_weight = false;
        if (std::sscanf(name.c_str(), "layer%zu.weight", &layer) == 1 &&
            name.ends_with(".weight")) {
            is_weight = true;
        } else if (std::sscanf(name.c_str(), "layer%zu.bias", &layer) == 1 &&
                   name.ends_with(".bias")) {
            is_weight = false;
        } else {
            throw CheckpointError("unknown array name '" + name + "' in " + path);
        }
        if (layer >= m.spec.layers.size())
            throw CheckpointError("array '" + name + "' addresses a missing layer");
        if (is_weight) {
            m.weights[layer] = TensorF(dims, std::move(payload));
        } else {
            m.biases[layer] = std::move(payload);
        }
    }

    // every parametrized layer must have been filled with the right shapes
    for (std::size_t i = 0; i < m.spec.layers.size(); ++i) {
        const LayerSpec& ls = m.spec.layers[i];
        if (ls.kind != LayerKind::Conv2d && ls.kind != LayerKind::Dense) continue;
        std::vector<int> want;
        const std::vector<int>& in = (i == 0) ? m.spec.input_shape : shapes[i - 1];
        if (ls.kind == LayerKind::Conv2d)
            want = {ls.out_channels, in[0], ls.kernel, ls.kernel};
        else
            want = {ls.out_features, static_cast<int>(TensorF::checked_numel(in))};
        if (m.weights[i].shape != want)
            throw CheckpointError("checkpoint missing or misshapen array 'layer" +
                                  std::to_string(i) + ".weight'");
        const std::size_t want_bias =
            ls.kind == LayerKind::Conv2d ? ls.out_channels : ls.out_features;
        if (m.biases[i].size() != want_bias)
            throw CheckpointError("checkpoint missing or misshapen array 'layer" +
                                  std::to_string(i) + ".bias'");
    }
    return m;
}

} // namespace advlab
