#include "advlab/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <span>

#include "advlab/layers.hpp"
#include "advlab/parallel.hpp"

#include "json.hpp"

namespace advlab {

namespace {

int argmax_lowest(const std::vector<float>& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

TensorF clamped_add(const TensorF& x, const TensorF& delta) {
    TensorF out(x.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::min(1.0f, std::max(0.0f, x.data[i] + delta.data[i]));
    return out;
}

std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Round-trips through the same fixed decimal form the CSV uses, so both
// formats carry identical numbers.
double round6(double v) { return std::stod(fmt6(v)); }

} // namespace

TasrResult tasr(const Model& m, const std::vector<TensorF>& adv_images,
                const std::vector<int>& targets, int threads) {
    if (adv_images.size() != targets.size())
        throw std::invalid_argument("tasr: image/target length mismatch");
    if (adv_images.empty()) return {0.0, true};
    const int n = static_cast<int>(adv_images.size());
    const int nt = std::max(1, std::min(threads, n));
    std::vector<int> hits(nt, 0);
    parallel_for(n, nt, [&](int t, int lo, int hi) {
        for (int i = lo; i < hi; ++i)
            if (argmax_lowest(forward(m, adv_images[i])) == targets[i]) ++hits[t];
    });
    int total = 0;
    for (int h : hits) total += h;
    return {static_cast<double>(total) / n, false};
}

std::vector<TransferCell> transfer_matrix(const std::vector<NamedModel>& models,
                                          const std::vector<NamedAttack>& attacks,
                                          const Dataset& subset, const std::vector<int>& targets,
                                          const std::vector<int>& checkpoints, int threads) {
    if (models.size() < 2) throw std::invalid_argument("transfer_matrix: need at least 2 models");
    if (subset.records.size() != targets.size())
        throw std::invalid_argument("transfer_matrix: subset/target length mismatch");
    if (checkpoints.empty()) throw std::invalid_argument("transfer_matrix: no checkpoints");

    const int n = static_cast<int>(subset.records.size());
    std::vector<TransferCell> cells;
    for (const NamedModel& surrogate : models) {
        for (const NamedAttack& atk : attacks) {
            // snapshots[k][i] = x_adv of image i at checkpoint k
            std::vector<std::vector<TensorF>> snapshots(checkpoints.size());
            for (auto& s : snapshots) s.resize(n);
            const int nt = std::max(1, std::min(threads, n));
            parallel_for(n, nt, [&](int, int lo, int hi) {
                for (int i = lo; i < hi; ++i) {
                    AdvResult r = attack(*surrogate.model, subset.records[i].pixels, targets[i],
                                         atk.config, i, checkpoints);
                    for (std::size_t k = 0; k < checkpoints.size(); ++k)
                        snapshots[k][i] = std::move(r.snapshots[k]);
                }
            });
            for (const NamedModel& victim : models) {
                TransferCell cell;
                cell.surrogate = surrogate.name;
                cell.victim = victim.name;
                cell.attack = atk.name;
                cell.checkpoints = checkpoints;
                cell.n_images = n;
                cell.seed = atk.config.seed;
                for (std::size_t k = 0; k < checkpoints.size(); ++k)
                    cell.tasr.push_back(tasr(*victim.model, snapshots[k], targets, threads).value);
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

std::vector<UniversalityRecord> universality_counts(const Model& m,
                                                    const std::vector<TensorF>& perturbations,
                                                    const std::vector<TensorF>& images,
                                                    const std::vector<int>& targets,
                                                    int threads) {
    if (perturbations.size() != targets.size())
        throw std::invalid_argument("universality_counts: perturbation/target length mismatch");
    const int np = static_cast<int>(perturbations.size());
    const int ni = static_cast<int>(images.size());
    std::vector<UniversalityRecord> records(np);
    const int nt = std::max(1, std::min(threads, np));
    parallel_for(np, nt, [&](int, int lo, int hi) {
        for (int j = lo; j < hi; ++j) {
            int count = 0;
            for (int i = 0; i < ni; ++i) {
                if (i == j) continue;
                if (argmax_lowest(forward(m, clamped_add(images[i], perturbations[j]))) ==
                    targets[j])
                    ++count;
            }
            records[j] = {j, targets[j], count};
        }
    });
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.perturbation_id < b.perturbation_id;
    });
    return records;
}

namespace {

double mean_pairwise_cs(const Model& m, const std::vector<TensorF>& inputs, int tap,
                        int threads) {
    const int n = static_cast<int>(inputs.size());
    std::vector<TensorF> feats(n);
    const int nt = std::max(1, std::min(threads, n));
    parallel_for(n, nt, [&](int, int lo, int hi) {
        for (int i = lo; i < hi; ++i) feats[i] = forward_with_taps(m, inputs[i], tap).feature;
    });
    double sum = 0.0;
    std::int64_t pairs = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            sum += cosine_similarity<float>(
                       std::span<const float>(feats[i].data.data(), feats[i].data.size()),
                       std::span<const float>(feats[j].data.data(), feats[j].data.size()))
                       .score;
            ++pairs;
        }
    return sum / static_cast<double>(pairs);
}

} // namespace

DominanceRecord feature_dominance(const Model& m, const std::vector<TensorF>& images,
                                  const TensorF& delta, int tap, int threads) {
    if (images.size() < 2) throw std::invalid_argument("feature_dominance: need at least 2 images");
    DominanceRecord rec;
    rec.tap = tap;
    rec.n_images = static_cast<int>(images.size());
    rec.mean_cs_benign = mean_pairwise_cs(m, images, tap, threads);
    std::vector<TensorF> adv;
    adv.reserve(images.size());
    for (const TensorF& x : images) adv.push_back(clamped_add(x, delta));
    rec.mean_cs_adversarial = mean_pairwise_cs(m, adv, tap, threads);
    return rec;
}

DominanceRecord dominance_summary(const Model& m, const std::vector<TensorF>& images,
                                  const std::vector<TensorF>& deltas, int tap, int threads) {
    if (images.size() < 2) throw std::invalid_argument("dominance_summary: need at least 2 images");
    if (deltas.empty()) throw std::invalid_argument("dominance_summary: no perturbations");
    DominanceRecord rec;
    rec.tap = tap;
    rec.n_images = static_cast<int>(images.size());
    rec.mean_cs_benign = mean_pairwise_cs(m, images, tap, threads);
    double sum = 0.0;
    for (const TensorF& delta : deltas) {
        std::vector<TensorF> adv;
        adv.reserve(images.size());
        for (const TensorF& x : images) adv.push_back(clamped_add(x, delta));
        sum += mean_pairwise_cs(m, adv, tap, threads);
    }
    rec.mean_cs_adversarial = sum / static_cast<double>(deltas.size());
    return rec;
}

// ---------------------------------------------------------------------------
// Reports. One transfer row per (cell, checkpoint); numbers fixed to 6
// decimals in both formats.
// ---------------------------------------------------------------------------

std::string to_csv(const std::vector<TransferCell>& cells) {
    std::string out = "surrogate,victim,attack,checkpoint,tasr,n_images,seed\n";
    for (const TransferCell& c : cells)
        for (std::size_t k = 0; k < c.checkpoints.size(); ++k)
            out += c.surrogate + ',' + c.victim + ',' + c.attack + ',' +
                   std::to_string(c.checkpoints[k]) + ',' + fmt6(c.tasr[k]) + ',' +
                   std::to_string(c.n_images) + ',' + std::to_string(c.seed) + '\n';
    return out;
}

std::string to_csv(const std::vector<UniversalityRecord>& records) {
    std::string out = "perturbation_id,target,count\n";
    for (const UniversalityRecord& r : records)
        out += std::to_string(r.perturbation_id) + ',' + std::to_string(r.target) + ',' +
               std::to_string(r.count) + '\n';
    return out;
}

std::string to_csv(const std::vector<DominanceRecord>& records) {
    std::string out = "tap,mean_cs_benign,mean_cs_adversarial,n_images\n";
    for (const DominanceRecord& r : records)
        out += std::to_string(r.tap) + ',' + fmt6(r.mean_cs_benign) + ',' +
               fmt6(r.mean_cs_adversarial) + ',' + std::to_string(r.n_images) + '\n';
    return out;
}

std::string to_json(const std::vector<TransferCell>& cells) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const TransferCell& c : cells)
        for (std::size_t k = 0; k < c.checkpoints.size(); ++k)
            arr.push_back({{"surrogate", c.surrogate},
                           {"victim", c.victim},
                           {"attack", c.attack},
                           {"checkpoint", c.checkpoints[k]},
                           {"tasr", round6(c.tasr[k])},
                           {"n_images", c.n_images},
                           {"seed", c.seed}});
    return arr.dump(2) + "\n";
}

std::string to_json(const std::vector<UniversalityRecord>& records) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const UniversalityRecord& r : records)
        arr.push_back(
            {{"perturbation_id", r.perturbation_id}, {"target", r.target}, {"count", r.count}});
    return arr.dump(2) + "\n";
}

std::string to_json(const std::vector<DominanceRecord>& records) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const DominanceRecord& r : records)
        arr.push_back({{"tap", r.tap},
                       {"mean_cs_benign", round6(r.mean_cs_benign)},
                       {"mean_cs_adversarial", round6(r.mean_cs_adversarial)},
                       {"n_images", r.n_images}});
    return arr.dump(2) + "\n";
}

} // namespace advlab
