#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advlab/tensor.hpp"

namespace advlab {

struct ImageRecord {
    TensorF pixels; // CxHxW, values in [0,1]
    int label = 0;
};

struct Dataset {
    std::vector<ImageRecord> records;
    int num_classes = 0;
    std::string provenance; // source file + split
};

struct TargetAssignment {
    std::vector<int> targets; // one per record, never the true label
    std::uint64_t seed = 0;
};

// IDX pair: images file (magic 0x00000803, dims NxHxW, C=1) plus labels file
// (magic 0x00000801, dim N). Pixels scale to [0,1] by division by 255.
Dataset parse_idx(const std::string& images_bytes, const std::string& labels_bytes,
                  const std::string& provenance = "idx");
std::string serialize_idx_images(const Dataset& ds);
std::string serialize_idx_labels(const Dataset& ds);

// CIFAR-10 binary: 3073-byte records, 1 label byte then 3072 pixel bytes in
// R,G,B plane order, each plane 32x32 row-major.
Dataset parse_cifar10(const std::string& bytes, const std::string& provenance = "cifar10");
std::string serialize_cifar10(const Dataset& ds);

// Per-image seeded draw from the K-1 classes excluding the true label.
TargetAssignment assign_targets(const Dataset& ds, std::uint64_t seed);

// First subset_size positions of a seeded shuffle of 0..dataset_size-1.
std::vector<int> eval_subset_indices(int dataset_size, int subset_size, std::uint64_t seed);

Dataset take_subset(const Dataset& ds, const std::vector<int>& indices);

// File helpers. resolve_data_path consults ADVLAB_DATA_DIR when the path does
// not exist as given.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);
std::string resolve_data_path(const std::string& name);

} // namespace advlab
