#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advlab/attack.hpp"
#include "advlab/data_io.hpp"
#include "advlab/model.hpp"

namespace advlab {

struct TasrResult {
    double value = 0.0;
    bool empty = false;
};

// Fraction of images whose argmax logit equals the target (ties to the lowest
// class index).
TasrResult tasr(const Model& m, const std::vector<TensorF>& adv_images,
                const std::vector<int>& targets, int threads = 1);

struct NamedModel {
    std::string name;
    const Model* model = nullptr;
};

struct NamedAttack {
    std::string name;
    AttackConfig config;
};

struct TransferCell {
    std::string surrogate;
    std::string victim;
    std::string attack;
    std::vector<int> checkpoints;
    std::vector<double> tasr; // one value per checkpoint
    int n_images = 0;
    std::uint64_t seed = 0;
};

// Each (surrogate, attack) pair is attacked once over the subset with x_adv
// snapshots at every checkpoint; every model (including the surrogate) is then
// scored as victim on the stored snapshots.
std::vector<TransferCell> transfer_matrix(const std::vector<NamedModel>& models,
                                          const std::vector<NamedAttack>& attacks,
                                          const Dataset& subset, const std::vector<int>& targets,
                                          const std::vector<int>& checkpoints, int threads = 1);

struct UniversalityRecord {
    int perturbation_id = 0; // source image index
    int target = 0;
    int count = 0; // successful targeted hits on the other images
};

// For each perturbation d_j with target t_j: count over i != j of
// argmax f(clamp(x_i + d_j, 0, 1)) == t_j. Sorted by count descending,
// ties by perturbation id ascending.
std::vector<UniversalityRecord> universality_counts(const Model& m,
                                                    const std::vector<TensorF>& perturbations,
                                                    const std::vector<TensorF>& images,
                                                    const std::vector<int>& targets,
                                                    int threads = 1);

struct DominanceRecord {
    int tap = 0;
    double mean_cs_benign = 0.0;
    double mean_cs_adversarial = 0.0;
    int n_images = 0;
};

// Mean cosine similarity over all unordered feature pairs at the tap, once on
// the benign set and once on {clamp(x_i + delta)} for one shared perturbation.
DominanceRecord feature_dominance(const Model& m, const std::vector<TensorF>& images,
                                  const TensorF& delta, int tap, int threads = 1);

// Benign mean plus the mean over several shared perturbations of the
// adversarial pairwise mean.
DominanceRecord dominance_summary(const Model& m, const std::vector<TensorF>& images,
                                  const std::vector<TensorF>& deltas, int tap, int threads = 1);

// Report serialization. CSV columns and JSON field names are fixed; equal
// inputs produce byte-identical output.
std::string to_csv(const std::vector<TransferCell>& cells);
std::string to_csv(const std::vector<UniversalityRecord>& records);
std::string to_csv(const std::vector<DominanceRecord>& records);
std::string to_json(const std::vector<TransferCell>& cells);
std::string to_json(const std::vector<UniversalityRecord>& records);
std::string to_json(const std::vector<DominanceRecord>& records);

enum class ReportFormat { Csv, Json };

template <class Record>
void emit_report(const std::vector<Record>& records, ReportFormat format,
                 const std::string& path) {
    write_file(path, format == ReportFormat::Csv ? to_csv(records) : to_json(records));
}

} // namespace advlab
