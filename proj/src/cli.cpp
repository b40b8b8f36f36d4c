#include "advlab/cli.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "advlab/attack.hpp"
#include "advlab/data_io.hpp"
#include "advlab/errors.hpp"
#include "advlab/eval.hpp"
#include "advlab/model.hpp"
#include "advlab/parallel.hpp"
#include "advlab/synth.hpp"
#include "advlab/trainer.hpp"

namespace advlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// -------------------------------------------------------------------------
// Config schema
// -------------------------------------------------------------------------

struct DatasetPlan {
    std::string format = "synthetic"; // synthetic | cifar10 | idx
    std::string path, labels_path, test_path, test_labels_path;
    int count = 512;       // synthetic train size
    int test_count = 128;  // synthetic test size
    std::uint64_t synth_seed = 1;
    int eval_subset = 8;
    bool target_seed_set = false, subset_seed_set = false;
    std::uint64_t target_seed = 0, subset_seed = 0;
};

struct ModelPlan {
    std::string name;
    std::string architecture;
    std::uint64_t init_seed = 0;
    TrainHyper hyper;
};

struct AttackPlan {
    std::string name;
    AttackConfig config;
    bool seed_set = false;
};

struct EvalPlan {
    std::vector<int> checkpoints; // empty means [iterations]
    bool universality = false;
    std::vector<int> dominance_taps;
};

struct RunConfig {
    DatasetPlan dataset;
    std::vector<ModelPlan> models;
    std::vector<AttackPlan> attacks;
    EvalPlan eval;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 1;
};

template <class T>
T get_or(const json& j, const char* key, T def) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    return it->get<T>();
}

TrainHyper parse_hyper(const json& j) {
    TrainHyper h;
    h.epochs = get_or(j, "epochs", h.epochs);
    h.batch_size = get_or(j, "batch_size", h.batch_size);
    h.learning_rate = get_or(j, "learning_rate", h.learning_rate);
    h.momentum = get_or(j, "momentum", h.momentum);
    h.seed = get_or(j, "seed", h.seed);
    if (auto it = j.find("decay"); it != j.end()) {
        h.decay.clear();
        for (const json& step : *it)
            h.decay.push_back({step.at(0).get<int>(), step.at(1).get<double>()});
    }
    validate(h);
    return h;
}

AttackConfig parse_attack_config(const json& j, std::uint64_t global_seed, bool* seed_set) {
    AttackConfig cfg = attack_preset(j.at("preset").get<std::string>());
    cfg.epsilon = get_or(j, "epsilon", cfg.epsilon);
    cfg.alpha = get_or(j, "alpha", cfg.alpha);
    cfg.iterations = get_or(j, "iterations", cfg.iterations);
    cfg.mu = get_or(j, "mu", cfg.mu);
    cfg.di_p = get_or(j, "di_p", cfg.di_p);
    cfg.ti_radius = get_or(j, "ti_radius", cfg.ti_radius);
    cfg.ti_sigma = get_or(j, "ti_sigma", cfg.ti_sigma);
    cfg.s_lower = get_or(j, "s_lower", cfg.s_lower);
    cfg.s_interval = get_or(j, "s_interval", cfg.s_interval);
    cfg.lambda = get_or(j, "lambda", cfg.lambda);
    cfg.tap = get_or(j, "tap", cfg.tap);
    cfg.enable_local = get_or(j, "enable_local", cfg.enable_local);
    if (auto it = j.find("loss"); it != j.end())
        cfg.loss = parse_loss_kind(it->get<std::string>());
    if (auto it = j.find("seed"); it != j.end()) {
        cfg.seed = it->get<std::uint64_t>();
        if (seed_set) *seed_set = true;
    } else {
        cfg.seed = global_seed;
    }
    validate(cfg);
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    json doc;
    f >> doc;

    RunConfig cfg;
    cfg.out_dir = get_or<std::string>(doc, "out_dir", cfg.out_dir);
    cfg.seed = get_or(doc, "seed", cfg.seed);
    cfg.threads = get_or(doc, "threads", cfg.threads);
    if (cfg.threads < 1) throw std::invalid_argument("threads must be >= 1");

    const json& d = doc.at("dataset");
    cfg.dataset.format = get_or<std::string>(d, "format", cfg.dataset.format);
    if (cfg.dataset.format != "synthetic" && cfg.dataset.format != "cifar10" &&
        cfg.dataset.format != "idx")
        throw std::invalid_argument("unknown dataset format '" + cfg.dataset.format + "'");
    cfg.dataset.path = get_or<std::string>(d, "path", "");
    cfg.dataset.labels_path = get_or<std::string>(d, "labels_path", "");
    cfg.dataset.test_path = get_or<std::string>(d, "test_path", "");
    cfg.dataset.test_labels_path = get_or<std::string>(d, "test_labels_path", "");
    cfg.dataset.count = get_or(d, "count", cfg.dataset.count);
    cfg.dataset.test_count = get_or(d, "test_count", cfg.dataset.test_count);
    cfg.dataset.synth_seed = get_or(d, "seed", cfg.dataset.synth_seed);
    cfg.dataset.eval_subset = get_or(d, "eval_subset", cfg.dataset.eval_subset);
    if (auto it = d.find("target_seed"); it != d.end()) {
        cfg.dataset.target_seed = it->get<std::uint64_t>();
        cfg.dataset.target_seed_set = true;
    }
    if (auto it = d.find("subset_seed"); it != d.end()) {
        cfg.dataset.subset_seed = it->get<std::uint64_t>();
        cfg.dataset.subset_seed_set = true;
    }
    if (cfg.dataset.format != "synthetic") {
        if (cfg.dataset.path.empty() || cfg.dataset.test_path.empty())
            throw std::invalid_argument("dataset path and test_path are required for format '" +
                                        cfg.dataset.format + "'");
        if (cfg.dataset.format == "idx" &&
            (cfg.dataset.labels_path.empty() || cfg.dataset.test_labels_path.empty()))
            throw std::invalid_argument("idx datasets need labels_path and test_labels_path");
    }

    for (const json& mj : doc.at("models")) {
        ModelPlan p;
        p.name = mj.at("name").get<std::string>();
        p.architecture = mj.at("architecture").get<std::string>();
        p.init_seed = get_or<std::uint64_t>(mj, "init_seed", 0);
        if (auto it = mj.find("train"); it != mj.end()) p.hyper = parse_hyper(*it);
        for (const ModelPlan& q : cfg.models)
            if (q.name == p.name)
                throw std::invalid_argument("duplicate model name '" + p.name + "'");
        cfg.models.push_back(std::move(p));
    }
    if (cfg.models.empty()) throw std::invalid_argument("config defines no models");

    if (auto it = doc.find("attacks"); it != doc.end()) {
        for (const json& aj : *it) {
            AttackPlan p;
            p.name = aj.at("name").get<std::string>();
            p.config = parse_attack_config(aj, cfg.seed, &p.seed_set);
            for (const AttackPlan& q : cfg.attacks)
                if (q.name == p.name)
                    throw std::invalid_argument("duplicate attack name '" + p.name + "'");
            cfg.attacks.push_back(std::move(p));
        }
    }

    if (auto it = doc.find("eval"); it != doc.end()) {
        const json& e = *it;
        if (auto t = e.find("transfer"); t != e.end())
            cfg.eval.checkpoints = get_or(*t, "checkpoints", cfg.eval.checkpoints);
        if (auto u = e.find("universality"); u != e.end())
            cfg.eval.universality = get_or(*u, "enabled", false);
        if (auto m = e.find("dominance"); m != e.end())
            cfg.eval.dominance_taps = get_or(*m, "taps", cfg.eval.dominance_taps);
        for (int t : cfg.eval.dominance_taps)
            if (t < 1 || t > 4) throw std::invalid_argument("dominance tap outside 1..4");
    }
    return cfg;
}

// -------------------------------------------------------------------------
// Dataset loading
// -------------------------------------------------------------------------

struct LoadedData {
    Dataset train, test;
};

LoadedData load_data(const DatasetPlan& d) {
    LoadedData out;
    if (d.format == "synthetic") {
        out.train = make_synthetic_dataset(d.count, d.synth_seed);
        out.test = make_synthetic_dataset(d.test_count, d.synth_seed + 1);
    } else if (d.format == "cifar10") {
        out.train = parse_cifar10(read_file(resolve_data_path(d.path)), d.path);
        out.test = parse_cifar10(read_file(resolve_data_path(d.test_path)), d.test_path);
    } else {
        out.train = parse_idx(read_file(resolve_data_path(d.path)),
                              read_file(resolve_data_path(d.labels_path)), d.path);
        out.test = parse_idx(read_file(resolve_data_path(d.test_path)),
                             read_file(resolve_data_path(d.test_labels_path)), d.test_path);
        // both splits must agree on the class count
        out.train.num_classes = out.test.num_classes =
            std::max(out.train.num_classes, out.test.num_classes);
    }
    return out;
}

ModelSpec spec_for(const ModelPlan& plan, const LoadedData& data) {
    return make_model_spec(plan.architecture, data.train.num_classes,
                           data.train.records[0].pixels.shape);
}

std::string checkpoint_path(const RunConfig& cfg, const std::string& model_name) {
    return (fs::path(cfg.out_dir) / "checkpoints" / (model_name + ".ckpt")).string();
}

const ModelPlan& find_model_plan(const RunConfig& cfg, const std::string& name) {
    for (const ModelPlan& p : cfg.models)
        if (p.name == name) return p;
    throw std::invalid_argument("unknown model name '" + name + "'");
}

// -------------------------------------------------------------------------
// Snapshot archive: raw little-endian float32 delta tensors plus a manifest
// -------------------------------------------------------------------------

std::string floats_to_le_bytes(const std::vector<float>& v) {
    std::string out;
    out.reserve(v.size() * 4);
    for (float f : v) {
        const std::uint32_t u = std::bit_cast<std::uint32_t>(f);
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
    }
    return out;
}

std::vector<float> le_bytes_to_floats(const std::string& bytes, const std::string& path) {
    if (bytes.size() % 4 != 0)
        throw ParseError("snapshot size is not a multiple of 4: " + path, bytes.size());
    std::vector<float> v(bytes.size() / 4);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k)
            u |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[4 * i + k]))
                 << (8 * k);
        v[i] = std::bit_cast<float>(u);
    }
    return v;
}

std::string snapshot_file(int image_index, int iteration) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "img_%04d_iter_%04d.bin", image_index, iteration);
    return buf;
}

// -------------------------------------------------------------------------
// Subcommands
// -------------------------------------------------------------------------

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    LoadedData data = load_data(cfg.dataset);
    for (const ModelPlan& plan : cfg.models) {
        ModelSpec spec = spec_for(plan, data);
        const fs::path log_path = fs::path(cfg.out_dir) / "logs" / (plan.name + ".log");
        fs::create_directories(log_path.parent_path());
        std::ofstream log(log_path);
        Model m = train(spec, data.train, plan.hyper, plan.init_seed, &log, cfg.threads);
        const std::string ckpt = checkpoint_path(cfg, plan.name);
        fs::create_directories(fs::path(ckpt).parent_path());
        save_checkpoint(m, ckpt);
        const Accuracy acc = eval_accuracy(m, data.test, cfg.threads);
        out << "model " << plan.name << " test_accuracy " << fmt6(acc.value) << '\n';
        out << "checkpoint " << ckpt << '\n';
    }
    return 0;
}

int cmd_attack(const RunConfig& cfg, const std::vector<std::string>& surrogates,
               const std::string& attack_name, std::ostream& out) {
    if (surrogates.empty()) throw std::invalid_argument("no surrogate given");
    LoadedData data = load_data(cfg.dataset);

    AttackPlan plan;
    bool found = false;
    for (const AttackPlan& p : cfg.attacks)
        if (p.name == attack_name) {
            plan = p;
            found = true;
            break;
        }
    if (!found) {
        plan.name = attack_name;
        plan.config = attack_preset(attack_name); // throws on unknown names
        plan.config.seed = cfg.seed;
    }

    std::vector<Model> models;
    std::vector<const Model*> model_ptrs;
    for (const std::string& name : surrogates) {
        const ModelPlan& mp = find_model_plan(cfg, name);
        models.push_back(load_checkpoint(checkpoint_path(cfg, name), spec_for(mp, data)));
    }
    for (const Model& m : models) model_ptrs.push_back(&m);

    const Dataset& pool = data.test;
    const std::uint64_t target_seed =
        cfg.dataset.target_seed_set ? cfg.dataset.target_seed : cfg.seed;
    const std::uint64_t subset_seed =
        cfg.dataset.subset_seed_set ? cfg.dataset.subset_seed : cfg.seed;
    TargetAssignment targets = assign_targets(pool, target_seed);
    if (cfg.dataset.eval_subset < 1 ||
        cfg.dataset.eval_subset > static_cast<int>(pool.records.size()))
        throw std::invalid_argument("eval_subset outside the test split size");
    std::vector<int> indices = eval_subset_indices(static_cast<int>(pool.records.size()),
                                                   cfg.dataset.eval_subset, subset_seed);

    std::vector<int> checkpoints = cfg.eval.checkpoints;
    if (checkpoints.empty()) checkpoints.push_back(plan.config.iterations);
    checkpoints.push_back(plan.config.iterations); // final iterate always stored
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    for (int cp : checkpoints)
        if (cp < 1 || cp > plan.config.iterations)
            throw std::invalid_argument("checkpoint " + std::to_string(cp) +
                                        " outside 1..iterations");

    std::string joined = surrogates[0];
    for (std::size_t i = 1; i < surrogates.size(); ++i) joined += "+" + surrogates[i];
    const fs::path snap_dir = fs::path(cfg.out_dir) / "snapshots" / joined / plan.name;
    fs::create_directories(snap_dir);

    const int n = static_cast<int>(indices.size());
    // deltas[i][k] = perturbation after checkpoint k for subset image i
    std::vector<std::vector<TensorF>> deltas(n);
    const int nt = std::max(1, std::min(cfg.threads, n));
    parallel_for(n, nt, [&](int, int lo, int hi) {
        for (int i = lo; i < hi; ++i) {
            const int idx = indices[i];
            AdvResult r = ensemble_attack(model_ptrs, pool.records[idx].pixels,
                                          targets.targets[idx], plan.config, idx, checkpoints);
            deltas[i].resize(checkpoints.size());
            for (std::size_t k = 0; k < checkpoints.size(); ++k) {
                // snapshots hold x_adv; persist the perturbation itself
                TensorF d(r.snapshots[k].shape);
                for (std::size_t e = 0; e < d.data.size(); ++e)
                    d.data[e] = r.snapshots[k].data[e] - pool.records[idx].pixels.data[e];
                deltas[i][k] = std::move(d);
            }
        }
    });

    for (int i = 0; i < n; ++i)
        for (std::size_t k = 0; k < checkpoints.size(); ++k)
            write_file((snap_dir / snapshot_file(indices[i], checkpoints[k])).string(),
                       floats_to_le_bytes(deltas[i][k].data));

    json manifest;
    manifest["surrogate"] = joined;
    manifest["attack"] = plan.name;
    manifest["checkpoints"] = checkpoints;
    manifest["image_indices"] = indices;
    json target_list = json::array();
    for (int idx : indices) target_list.push_back(targets.targets[idx]);
    manifest["targets"] = target_list;
    manifest["n_images"] = n;
    manifest["seed"] = plan.config.seed;
    manifest["shape"] = pool.records[0].pixels.shape;
    write_file((snap_dir / "manifest.json").string(), manifest.dump(2) + "\n");

    // white-box rate on the final iterate
    std::vector<TensorF> final_adv;
    std::vector<int> sub_targets;
    for (int i = 0; i < n; ++i) {
        final_adv.push_back(add(pool.records[indices[i]].pixels, deltas[i].back()));
        sub_targets.push_back(targets.targets[indices[i]]);
    }
    for (std::size_t s = 0; s < surrogates.size(); ++s) {
        const TasrResult r = tasr(models[s], final_adv, sub_targets, cfg.threads);
        out << "white-box " << surrogates[s] << " success_rate " << fmt6(r.value) << '\n';
    }
    out << "snapshots " << snap_dir.string() << '\n';
    return 0;
}

struct SnapshotSet {
    std::string surrogate, attack;
    std::vector<int> checkpoints, image_indices, targets;
    std::uint64_t seed = 0;
    std::vector<int> shape;
    fs::path dir;
};

SnapshotSet read_manifest(const fs::path& dir) {
    const std::string text = read_file((dir / "manifest.json").string());
    json doc = json::parse(text);
    SnapshotSet s;
    s.surrogate = doc.at("surrogate").get<std::string>();
    s.attack = doc.at("attack").get<std::string>();
    s.checkpoints = doc.at("checkpoints").get<std::vector<int>>();
    s.image_indices = doc.at("image_indices").get<std::vector<int>>();
    s.targets = doc.at("targets").get<std::vector<int>>();
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.shape = doc.at("shape").get<std::vector<int>>();
    s.dir = dir;
    return s;
}

std::vector<TensorF> load_deltas(const SnapshotSet& s, int checkpoint) {
    std::vector<TensorF> out;
    out.reserve(s.image_indices.size());
    for (int idx : s.image_indices) {
        const std::string path = (s.dir / snapshot_file(idx, checkpoint)).string();
        out.emplace_back(s.shape, le_bytes_to_floats(read_file(path), path));
    }
    return out;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
    LoadedData data = load_data(cfg.dataset);
    const Dataset& pool = data.test;

    const fs::path snap_root = fs::path(cfg.out_dir) / "snapshots";
    std::vector<fs::path> manifest_dirs;
    if (fs::exists(snap_root))
        for (const auto& sur : fs::directory_iterator(snap_root))
            for (const auto& atk : fs::directory_iterator(sur.path()))
                if (fs::exists(atk.path() / "manifest.json")) manifest_dirs.push_back(atk.path());
    std::sort(manifest_dirs.begin(), manifest_dirs.end());
    if (manifest_dirs.empty())
        throw ParseError("no snapshots under " + snap_root.string(), 0);

    std::vector<std::string> names;
    std::vector<Model> victims;
    for (const ModelPlan& plan : cfg.models) {
        names.push_back(plan.name);
        victims.push_back(load_checkpoint(checkpoint_path(cfg, plan.name), spec_for(plan, data)));
    }
    auto model_by_name = [&](const std::string& name) -> const Model& {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return victims[i];
        throw std::invalid_argument("snapshot references unknown model '" + name + "'");
    };

    const fs::path report_dir = fs::path(cfg.out_dir) / "reports";
    std::vector<TransferCell> cells;
    for (const fs::path& dir : manifest_dirs) {
        SnapshotSet snap = read_manifest(dir);
        std::vector<TensorF> benign;
        for (int idx : snap.image_indices) {
            if (idx < 0 || idx >= static_cast<int>(pool.records.size()))
                throw ParseError("manifest image index outside the test split: " + dir.string(),
                                 0);
            benign.push_back(pool.records[idx].pixels);
        }

        std::vector<std::vector<TensorF>> adv_per_cp;
        for (int cp : snap.checkpoints) {
            std::vector<TensorF> deltas = load_deltas(snap, cp);
            std::vector<TensorF> adv;
            adv.reserve(deltas.size());
            for (std::size_t i = 0; i < deltas.size(); ++i)
                adv.push_back(add(benign[i], deltas[i]));
            adv_per_cp.push_back(std::move(adv));
        }
        for (std::size_t v = 0; v < victims.size(); ++v) {
            TransferCell cell;
            cell.surrogate = snap.surrogate;
            cell.victim = names[v];
            cell.attack = snap.attack;
            cell.checkpoints = snap.checkpoints;
            cell.n_images = static_cast<int>(snap.image_indices.size());
            cell.seed = snap.seed;
            for (const auto& adv : adv_per_cp)
                cell.tasr.push_back(tasr(victims[v], adv, snap.targets, cfg.threads).value);
            cells.push_back(std::move(cell));
        }

        // universality and dominance run on the surrogate (first name for
        // ensembles) with the final-iterate perturbations
        const std::string first = snap.surrogate.substr(0, snap.surrogate.find('+'));
        const Model& surrogate = model_by_name(first);
        std::vector<TensorF> final_deltas = load_deltas(snap, snap.checkpoints.back());
        const std::string stem = snap.surrogate + "_" + snap.attack;
        if (cfg.eval.universality) {
            auto records =
                universality_counts(surrogate, final_deltas, benign, snap.targets, cfg.threads);
            emit_report(records, ReportFormat::Csv,
                        (report_dir / ("universality_" + stem + ".csv")).string());
            emit_report(records, ReportFormat::Json,
                        (report_dir / ("universality_" + stem + ".json")).string());
            out << "wrote " << (report_dir / ("universality_" + stem + ".csv")).string() << '\n';
        }
        if (!cfg.eval.dominance_taps.empty()) {
            std::vector<DominanceRecord> records;
            for (int tap : cfg.eval.dominance_taps)
                records.push_back(
                    dominance_summary(surrogate, benign, final_deltas, tap, cfg.threads));
            emit_report(records, ReportFormat::Csv,
                        (report_dir / ("dominance_" + stem + ".csv")).string());
            emit_report(records, ReportFormat::Json,
                        (report_dir / ("dominance_" + stem + ".json")).string());
            out << "wrote " << (report_dir / ("dominance_" + stem + ".csv")).string() << '\n';
        }
    }

    emit_report(cells, ReportFormat::Csv, (report_dir / "transfer.csv").string());
    emit_report(cells, ReportFormat::Json, (report_dir / "transfer.json").string());
    out << "wrote " << (report_dir / "transfer.csv").string() << '\n';
    return 0;
}

} // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"adversarial attack laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_override;
    std::uint64_t seed_override = 0;
    int threads_override = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--seed", seed_override, "override the global seed")
            ->each([&](const std::string&) { seed_given = true; });
        sub->add_option("--threads", threads_override, "worker thread count");
        sub->add_option("--out", out_override, "override the output directory");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train the configured models");
    add_common(train_cmd);

    std::vector<std::string> surrogates;
    std::string attack_name;
    CLI::App* attack_cmd = app.add_subcommand("attack", "attack the evaluation subset");
    add_common(attack_cmd);
    attack_cmd->add_option("--surrogate", surrogates, "surrogate model name (repeat to ensemble)")
        ->required();
    attack_cmd->add_option("--attack", attack_name, "attack name (config entry or preset)")
        ->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate stored snapshots");
    add_common(eval_cmd);

    std::vector<const char*> argv;
    argv.push_back("advlab");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: config: " << e.what() << '\n';
        return 2;
    }

    try {
        RunConfig cfg = parse_config(config_path);
        if (seed_given) cfg.seed = seed_override;
        if (threads_override > 0) cfg.threads = threads_override;
        if (!out_override.empty()) cfg.out_dir = out_override;
        // attack seeds follow the global seed unless pinned per attack
        for (AttackPlan& p : cfg.attacks)
            if (!p.seed_set) p.config.seed = cfg.seed;

        if (train_cmd->parsed()) return cmd_train(cfg, out);
        if (attack_cmd->parsed()) return cmd_attack(cfg, surrogates, attack_name, out);
        return cmd_eval(cfg, out);
    } catch (const TrainingError& e) {
        err << "error: train: " << e.what() << '\n'; // what() carries the epoch
        return 4;
    } catch (const ParseError& e) {
        err << "error: data: " << e.what() << '\n'; // what() carries the offset
        return 3;
    } catch (const CheckpointError& e) {
        err << "error: data: " << e.what() << '\n';
        return 3;
    } catch (const json::exception& e) {
        err << "error: config: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: config: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: data: " << e.what() << '\n';
        return 3;
    }
}

} // namespace advlab
