#include "seqmem/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seqmem/io.hpp"

namespace seqmem {

using nlohmann::json;

namespace {

TaskKind task_from(const std::string& s) {
    if (s == "generation") return TaskKind::Generation;
    if (s == "pianoroll") return TaskKind::Pianoroll;
    if (s == "classification") return TaskKind::Classification;
    throw std::invalid_argument("unknown task \"" + s + "\"");
}

ArchKind arch_from(const std::string& s) {
    if (s == "rnn") return ArchKind::Rnn;
    if (s == "lmn") return ArchKind::Lmn;
    if (s == "urnn") return ArchKind::Urnn;
    if (s == "mslmn") return ArchKind::Mslmn;
    throw std::invalid_argument("unknown architecture \"" + s + "\"");
}

PipelineKind pipeline_from(const std::string& s) {
    if (s == "plain") return PipelineKind::Plain;
    if (s == "lmn_pretrain") return PipelineKind::LmnPretrain;
    if (s == "mslmn_incremental") return PipelineKind::MslmnIncremental;
    throw std::invalid_argument("unknown pipeline \"" + s + "\"");
}

LossKind loss_from(const std::string& s) {
    if (s == "mse") return LossKind::Mse;
    if (s == "nmse") return LossKind::Nmse;
    if (s == "bce") return LossKind::Bce;
    if (s == "cross_entropy") return LossKind::CrossEntropy;
    throw std::invalid_argument("unknown loss \"" + s + "\"");
}

}  // namespace

void ExperimentConfig::validate() const {
    train.validate();
    if (budget && (n_h || n_m))
        throw std::invalid_argument("config: give a budget or explicit sizes, not both");
    if (budget && *budget < 1) throw std::invalid_argument("config: budget must be positive");
    if (g < 1 || k < 1) throw std::invalid_argument("config: g and k must be >= 1");
    if (length < 1 || n_sequences < 1 || n_notes < 1 || n_classes < 2)
        throw std::invalid_argument("config: bad task sizes");
    if (pipeline == PipelineKind::LmnPretrain && arch != ArchKind::Lmn)
        throw std::invalid_argument("config: lmn_pretrain requires the lmn architecture");
    if (pipeline == PipelineKind::MslmnIncremental && arch != ArchKind::Mslmn)
        throw std::invalid_argument("config: mslmn_incremental requires the mslmn architecture");
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
    ExperimentConfig c;
    if (doc.contains("task")) c.task = task_from(doc["task"].get<std::string>());
    if (doc.contains("architecture")) c.arch = arch_from(doc["architecture"].get<std::string>());
    if (doc.contains("pipeline")) c.pipeline = pipeline_from(doc["pipeline"].get<std::string>());
    if (doc.contains("budget")) c.budget = doc["budget"].get<long>();
    if (doc.contains("n_h")) c.n_h = doc["n_h"].get<int>();
    if (doc.contains("n_m")) c.n_m = doc["n_m"].get<int>();
    c.g = doc.value("g", c.g);
    c.k = doc.value("k", c.k);
    c.seed = doc.value("seed", c.seed);
    c.out_dir = doc.value("out_dir", c.out_dir);
    c.length = doc.value("length", c.length);
    c.n_sequences = doc.value("n_sequences", c.n_sequences);
    c.n_notes = doc.value("n_notes", c.n_notes);
    c.n_classes = doc.value("n_classes", c.n_classes);
    c.epochs_per_stage = doc.value("epochs_per_stage", c.epochs_per_stage);
    if (doc.contains("train")) {
        const json& t = doc["train"];
        c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
        c.train.l2_decay = t.value("l2_decay", c.train.l2_decay);
        c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
        c.train.patience = t.value("patience", c.train.patience);
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.input_noise_std = t.value("input_noise_std", c.train.input_noise_std);
        if (t.contains("loss")) c.train.loss_kind = loss_from(t["loss"].get<std::string>());
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

ArchDesc resolve_budget(ArchDesc base, long budget) {
    auto sized = [&](int free_dim) {
        ArchDesc d = base;
        if (base.kind == ArchKind::Rnn || base.kind == ArchKind::Urnn)
            d.n_h = free_dim;
        else
            d.n_m = free_dim;
        return d;
    };
    if (count_params(sized(1)) > budget)
        throw std::invalid_argument("budget too small for the smallest model");
    int dim = 1;
    while (count_params(sized(dim + 1)) <= budget) ++dim;
    return sized(dim);
}

ArchDesc experiment_arch(const ExperimentConfig& config, int n_x, int n_y) {
    ArchDesc desc;
    desc.kind = config.arch;
    desc.n_x = n_x;
    desc.n_y = n_y;
    desc.g = config.g;
    desc.k = config.k;
    if (config.budget) {
        // Table-style sizing: the feature layer stays narrow and the
        // memory takes the budget.
        desc.n_h = config.n_h.value_or(
            config.arch == ArchKind::Lmn ? 2 : config.arch == ArchKind::Mslmn ? 1 : 1);
        return resolve_budget(desc, *config.budget);
    }
    const bool needs_nm = config.arch == ArchKind::Lmn || config.arch == ArchKind::Mslmn;
    if (!config.n_h || (needs_nm && !config.n_m))
        throw std::invalid_argument("config: explicit sizes incomplete");
    desc.n_h = *config.n_h;
    if (config.n_m) desc.n_m = *config.n_m;
    return desc;
}

double dataset_accuracy(const Model& model, const std::vector<const Sequence*>& data) {
    require(!data.empty(), "dataset_accuracy: empty data");
    long hits = 0;
    for (const Sequence* seq : data) {
        require(seq->has_label(), "dataset_accuracy: unlabeled sequence");
        const Matrix pred = predict(model, seq->inputs);
        Eigen::Index best = 0;
        pred.row(pred.rows() - 1).maxCoeff(&best);
        if (static_cast<int>(best) == seq->label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

SequenceDataset gen_classification_task(std::uint64_t seed, int n_sequences,
                                        int length, int n_classes) {
    require(n_sequences >= 1 && length >= 2 && n_classes >= 2,
            "gen_classification_task: bad sizes");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::normal_distribution<double> noise(0.0, 0.1);
    SequenceDataset ds;
    for (int i = 0; i < n_sequences; ++i) {
        const int label = i % n_classes;
        const double freq = 0.04 * (label + 1);
        const double phi = phase(rng);
        Sequence seq;
        seq.inputs.resize(length, 1);
        for (int t = 0; t < length; ++t)
            seq.inputs(t, 0) = std::sin(2.0 * M_PI * freq * t + phi) + noise(rng);
        seq.label = label;
        const int r = i % 10;
        seq.split = r < 7 ? Split::Train : r < 9 ? Split::Val : Split::Test;
        ds.sequences.push_back(std::move(seq));
    }
    return ds;
}

namespace {

SequenceDataset build_dataset(const ExperimentConfig& c) {
    switch (c.task) {
        case TaskKind::Generation: return gen_sequence_task(c.seed, c.length);
        case TaskKind::Pianoroll:
            return gen_pianoroll_task(c.seed, c.n_sequences, c.length, c.n_notes);
        case TaskKind::Classification:
            return gen_classification_task(c.seed, c.n_sequences, c.length, c.n_classes);
    }
    throw std::logic_error("unreachable task kind");
}

struct TaskDefaults {
    LossKind loss;
    OutputAct act;
};

TaskDefaults task_defaults(TaskKind task) {
    switch (task) {
        case TaskKind::Generation: return {LossKind::Mse, OutputAct::Identity};
        case TaskKind::Pianoroll: return {LossKind::Bce, OutputAct::Sigmoid};
        case TaskKind::Classification: return {LossKind::CrossEntropy, OutputAct::Identity};
    }
    throw std::logic_error("unreachable task kind");
}

void write_metrics_csv(const std::string& path, const std::vector<EpochRecord>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,train_loss,val_loss\n";
    for (const auto& r : history)
        out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << '\n';
}

void write_predictions_csv(const std::string& path, const Matrix& target,
                           const Matrix& pred) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "step,target,prediction\n";
    for (Eigen::Index t = 0; t < target.rows(); ++t)
        out << t << ',' << target(t, 0) << ',' << pred(t, 0) << '\n';
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const auto out = [&](const char* name) {
        return (fs::path(config.out_dir) / name).string();
    };
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const SequenceDataset ds = build_dataset(config);
        auto train_set = ds.split(Split::Train);
        auto val_set = ds.split(Split::Val);
        auto test_set = ds.split(Split::Test);
        // A single generation sequence has no held-out part: early stopping
        // watches the training loss and the final metric is in-sample.
        if (val_set.empty()) val_set = train_set;
        if (test_set.empty()) test_set = val_set;

        const auto defaults = task_defaults(config.task);
        TrainConfig tc = config.train;
        tc.loss_kind = defaults.loss;
        tc.seed = config.seed;

        const int n_x = static_cast<int>(ds.input_size());
        const int n_y = config.task == TaskKind::Classification
                            ? config.n_classes
                            : static_cast<int>(train_set.front()->targets.cols());
        const ArchDesc desc = experiment_arch(config, n_x, n_y);

        Model model;
        std::vector<EpochRecord> history;
        if (config.pipeline == PipelineKind::LmnPretrain) {
            auto res = lmn_train(train_set, val_set, n_x, n_y, desc.n_h, desc.n_m,
                                 config.k, tc, defaults.act);
            model = std::move(res.model);
            history = std::move(res.urnn_history);
            const int offset = static_cast<int>(history.size());
            for (auto r : res.finetune_history) {
                r.epoch += offset;
                history.push_back(r);
            }
        } else if (config.pipeline == PipelineKind::MslmnIncremental) {
            IncrementalSchedule sched;
            sched.target_modules = desc.g;
            sched.module_size = desc.n_m;
            sched.epochs_per_stage = config.epochs_per_stage;
            auto res = mslmn_train(train_set, val_set, n_x, n_y, desc.n_h, sched, tc,
                                   defaults.act);
            model = std::move(res.model);
            int offset = 0;
            for (const auto& stage : res.stage_histories) {
                for (auto r : stage) {
                    r.epoch += offset;
                    history.push_back(r);
                }
                offset = static_cast<int>(history.size());
            }
        } else {
            std::mt19937_64 rng(config.seed);
            Model init = random_model(desc, rng, defaults.act);
            auto res = train(std::move(init), train_set, val_set, tc);
            model = std::move(res.model);
            history = std::move(res.history);
        }

        ExperimentReport report;
        report.params = count_params(model);
        report.epochs = static_cast<int>(history.size());
        if (!history.empty()) {
            report.final_train_loss = history.back().train_loss;
            report.final_val_loss = history.back().val_loss;
        }
        switch (config.task) {
            case TaskKind::Generation:
                report.metric_name = "nmse";
                report.metric_value = dataset_nmse(model, test_set);
                break;
            case TaskKind::Pianoroll:
                report.metric_name = "frame_accuracy";
                report.metric_value = dataset_frame_accuracy(model, test_set);
                break;
            case TaskKind::Classification:
                report.metric_name = "accuracy";
                report.metric_value = dataset_accuracy(model, test_set);
                break;
        }
        report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        write_metrics_csv(out("metrics.csv"), history);
        if (config.task == TaskKind::Generation) {
            const Sequence& seq = *train_set.front();
            write_predictions_csv(out("predictions.csv"), seq.targets,
                                  predict(model, seq.inputs));
        }
        save_checkpoint(model, out("checkpoint.json"));
        {
            json fm;
            fm["loss"] = report.final_train_loss;
            fm["val_loss"] = report.final_val_loss;
            fm[report.metric_name] = report.metric_value;
            fm["epochs"] = report.epochs;
            fm["params"] = report.params;
            fm["wall_seconds"] = report.wall_seconds;
            fm["seed"] = config.seed;
            std::ofstream fo(out("final_metrics.json"));
            if (!fo) throw std::runtime_error("cannot write final_metrics.json");
            fo << fm.dump(2) << '\n';
        }
        report.model = std::move(model);
        return report;
    } catch (const std::exception& e) {
        std::ofstream marker(out("FAILED"));
        marker << e.what() << '\n';
        throw;
    }
}

}  // namespace seqmem
