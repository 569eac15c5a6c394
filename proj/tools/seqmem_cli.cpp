#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqmem/experiment.hpp"
#include "seqmem/io.hpp"

using namespace seqmem;
using nlohmann::json;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "JSON experiment config");
    cmd->add_option("--seed", c.seed, "Override the config seed");
    cmd->add_option("--out", c.out, "Output directory");
}

ExperimentConfig resolved_config(const Common& c) {
    ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{}
                                                 : load_experiment_config(c.config_path);
    if (c.seed) {
        cfg.seed = *c.seed;
        cfg.train.seed = *c.seed;
    }
    if (!c.out.empty()) cfg.out_dir = c.out;
    return cfg;
}

std::vector<const Sequence*> all_of(const SequenceDataset& ds) {
    std::vector<const Sequence*> out;
    for (const auto& s : ds.sequences) out.push_back(&s);
    return out;
}

int cmd_gen_data(const Common& common) {
    const ExperimentConfig cfg = resolved_config(common);
    const SequenceDataset ds = [&] {
        switch (cfg.task) {
            case TaskKind::Generation: return gen_sequence_task(cfg.seed, cfg.length);
            case TaskKind::Pianoroll:
                return gen_pianoroll_task(cfg.seed, cfg.n_sequences, cfg.length, cfg.n_notes);
            case TaskKind::Classification:
                return gen_classification_task(cfg.seed, cfg.n_sequences, cfg.length,
                                               cfg.n_classes);
        }
        throw std::logic_error("unreachable");
    }();
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = std::filesystem::path(cfg.out_dir) / "data.jsonl";
    save_sequences(ds, path.string());
    std::cout << "wrote " << ds.sequences.size() << " sequences to " << path.string()
              << "\n";
    return 0;
}

int cmd_fit_laes(const Common& common, const std::string& data_path, int rank,
                 bool streaming) {
    const SequenceDataset ds = load_sequences(data_path);
    std::vector<Matrix> seqs;
    for (const auto& s : ds.sequences) seqs.push_back(s.inputs);
    const LaesParams laes = fit(seqs, rank, streaming);
    json rep;
    rep["rank"] = laes.p;
    rep["input_size"] = laes.a_in;
    rep["discarded_energy"] = laes.discarded_energy;
    rep["reconstruction_error"] = corpus_reconstruction_error(laes, seqs);
    json sv = json::array();
    for (Eigen::Index i = 0; i < laes.singular_values.size(); ++i)
        sv.push_back(laes.singular_values(i));
    rep["singular_values"] = std::move(sv);
    std::cout << rep.dump(2) << "\n";
    if (!common.out.empty()) {
        std::filesystem::create_directories(common.out);
        std::ofstream f(std::filesystem::path(common.out) / "laes.json");
        f << rep.dump(2) << "\n";
    }
    return 0;
}

int cmd_train(const Common& common) {
    const ExperimentConfig cfg = resolved_config(common);
    const ExperimentReport rep = run_experiment(cfg);
    std::cout << rep.metric_name << " " << rep.metric_value << " (loss "
              << rep.final_train_loss << ", " << rep.epochs << " epochs, "
              << rep.params << " params, " << rep.wall_seconds << "s)\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path,
             const std::string& metric) {
    const Model model = load_checkpoint(checkpoint);
    const SequenceDataset ds = load_sequences(data_path);
    const auto data = all_of(ds);
    double value = 0.0;
    if (metric == "nmse")
        value = dataset_nmse(model, data);
    else if (metric == "frame_accuracy")
        value = dataset_frame_accuracy(model, data);
    else if (metric == "accuracy")
        value = dataset_accuracy(model, data);
    else
        throw std::invalid_argument("unknown metric \"" + metric + "\"");
    std::cout << metric << " " << value << "\n";
    return 0;
}

int cmd_gradcheck(const Common& common, double tolerance) {
    const ExperimentConfig cfg = resolved_config(common);
    std::mt19937_64 rng(cfg.seed);
    ArchDesc desc;
    desc.kind = cfg.arch;
    desc.n_x = 3;
    desc.n_h = cfg.n_h.value_or(4);
    desc.n_m = cfg.n_m.value_or(3);
    desc.n_y = 2;
    desc.g = cfg.g;
    desc.k = cfg.k;
    const Model model = random_model(desc, rng);
    Sequence seq;
    std::normal_distribution<double> dist;
    seq.inputs.resize(8, desc.n_x);
    seq.targets.resize(8, desc.n_y);
    for (Eigen::Index i = 0; i < seq.inputs.size(); ++i)
        seq.inputs.data()[i] = dist(rng);
    for (Eigen::Index i = 0; i < seq.targets.size(); ++i)
        seq.targets.data()[i] = dist(rng);
    const std::vector<const Sequence*> batch{&seq};
    const double err = grad_check(model, batch, cfg.train.loss_kind);
    std::cout << "max relative gradient error " << err << "\n";
    if (err > tolerance) {
        std::cerr << "gradcheck failed: " << err << " > " << tolerance << "\n";
        return 1;
    }
    return 0;
}

int cmd_param_count(const Common& common) {
    const ExperimentConfig cfg = resolved_config(common);
    // Geometry only; the dataset is never built, so any in/out sizes work.
    const int n_x = cfg.task == TaskKind::Generation    ? 0
                    : cfg.task == TaskKind::Pianoroll   ? cfg.n_notes
                                                        : 1;
    const int n_y = cfg.task == TaskKind::Generation    ? 1
                    : cfg.task == TaskKind::Pianoroll   ? cfg.n_notes
                                                        : cfg.n_classes;
    const ArchDesc desc = experiment_arch(cfg, n_x, n_y);
    std::cout << "n_h " << desc.n_h << " n_m " << desc.n_m << " g " << desc.g << " k "
              << desc.k << " params " << count_params(desc) << "\n";
    return 0;
}

int cmd_sweep(const Common& common) {
    if (common.config_path.empty())
        throw std::invalid_argument("sweep requires --config");
    std::ifstream in(common.config_path);
    if (!in) throw std::invalid_argument("cannot open " + common.config_path);
    json doc = json::parse(in);
    if (!doc.contains("base") || !doc.contains("seeds"))
        throw std::invalid_argument("sweep config needs \"base\" and \"seeds\"");
    ExperimentConfig base = parse_experiment_config(doc["base"].dump());
    if (!common.out.empty()) base.out_dir = common.out;
    const std::string root = base.out_dir;
    for (const auto& s : doc["seeds"]) {
        ExperimentConfig cfg = base;
        cfg.seed = s.get<std::uint64_t>();
        cfg.train.seed = cfg.seed;
        cfg.out_dir =
            (std::filesystem::path(root) / ("seed_" + std::to_string(cfg.seed))).string();
        const ExperimentReport rep = run_experiment(cfg);
        std::cout << "seed " << cfg.seed << ": " << rep.metric_name << " "
                  << rep.metric_value << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequence-memory network toolkit"};
    app.require_subcommand(1);

    Common common;
    std::string data_path, checkpoint, metric = "nmse";
    int rank = 0;
    bool streaming = false;
    double tolerance = 1e-4;

    auto* fit_laes = app.add_subcommand("fit-laes", "Closed-form autoencoder fit");
    add_common(fit_laes, common);
    fit_laes->add_option("--data", data_path, "Line-delimited JSON dataset")->required();
    fit_laes->add_option("--rank", rank, "Retained rank p")->required();
    fit_laes->add_flag("--streaming", streaming, "Slice-wise incremental SVD");

    auto* train = app.add_subcommand("train", "Run a training experiment");
    add_common(train, common);

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    add_common(eval, common);
    eval->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
    eval->add_option("--data", data_path, "Line-delimited JSON dataset")->required();
    eval->add_option("--metric", metric, "nmse | frame_accuracy | accuracy");

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    add_common(gradcheck, common);
    gradcheck->add_option("--tolerance", tolerance, "Max relative error allowed");

    auto* param_count = app.add_subcommand("param-count", "Resolve sizes and count params");
    add_common(param_count, common);

    auto* gen_data = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    add_common(gen_data, common);

    auto* sweep = app.add_subcommand("sweep", "Run one config over several seeds");
    add_common(sweep, common);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(fit_laes)) return cmd_fit_laes(common, data_path, rank, streaming);
        if (app.got_subcommand(train)) return cmd_train(common);
        if (app.got_subcommand(eval)) return cmd_eval(checkpoint, data_path, metric);
        if (app.got_subcommand(gradcheck)) return cmd_gradcheck(common, tolerance);
        if (app.got_subcommand(param_count)) return cmd_param_count(common);
        if (app.got_subcommand(gen_data)) return cmd_gen_data(common);
        if (app.got_subcommand(sweep)) return cmd_sweep(common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
