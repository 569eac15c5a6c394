#pragma once

#include <optional>
#include <string>

#include "seqmem/pipeline.hpp"
#include "seqmem/tasks.hpp"

namespace seqmem {

enum class TaskKind { Generation, Pianoroll, Classification };
enum class PipelineKind { Plain, LmnPretrain, MslmnIncremental };

struct ExperimentConfig {
    TaskKind task = TaskKind::Generation;
    ArchKind arch = ArchKind::Rnn;
    PipelineKind pipeline = PipelineKind::Plain;

    // Sizing: a parameter budget or explicit sizes, never both. Under a
    // budget, n_h stays fixed (defaults below) and the free dimension
    // (n_h for rnn/urnn, n_m otherwise) grows to the largest fit.
    std::optional<long> budget;
    std::optional<int> n_h;
    std::optional<int> n_m;
    int g = 1;  // memory modules (mslmn)
    int k = 1;  // tape depth (urnn; also the pretraining unroll depth)

    TrainConfig train;
    std::uint64_t seed = 0;
    std::string out_dir = ".";

    // Task parameters.
    int length = 300;
    int n_sequences = 20;
    int n_notes = 88;
    int n_classes = 4;
    int epochs_per_stage = 20;  // incremental pipeline, intermediate stages

    void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Largest free dimension whose parameter count fits the budget: the
/// returned sizes satisfy count_params(desc) <= budget and incrementing the
/// free dimension would exceed it.
ArchDesc resolve_budget(ArchDesc base, long budget);

/// The model geometry an experiment will train, after budget resolution.
ArchDesc experiment_arch(const ExperimentConfig& config, int n_x, int n_y);

struct ExperimentReport {
    Model model;
    std::string metric_name;  // "nmse", "frame_accuracy", or "accuracy"
    double metric_value = 0.0;
    double final_train_loss = 0.0;
    double final_val_loss = 0.0;
    int epochs = 0;
    long params = 0;
    double wall_seconds = 0.0;
};

/// Builds the task dataset, sizes the model, runs the selected pipeline and
/// writes metrics.csv, final_metrics.json, checkpoint.json (plus
/// predictions.csv for the generation task) into config.out_dir. On failure
/// a FAILED marker naming the error is left in the directory.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Fraction of labeled sequences whose argmax final output matches.
double dataset_accuracy(const Model& model, const std::vector<const Sequence*>& data);

/// Synthetic labeled task: 1-d noisy sinusoid, label = frequency index.
SequenceDataset gen_classification_task(std::uint64_t seed, int n_sequences,
                                        int length, int n_classes);

}  // namespace seqmem
