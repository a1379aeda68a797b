#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prro/evaluation.hpp"
#include "prro/generator.hpp"
#include "prro/pruning.hpp"
#include "prro/table.hpp"

namespace prro {

enum class ReorderMode { PredictorLast, PredictorFirst, Importance };
enum class GeneratorChoice { Chain, Bridge };
enum class PruneMethod { Signal, RandomUndersample, ClusterCentroids };

// Everything a run needs, parsed from one key=value config file so a run
// is reproducible from a single artifact. All randomness fans out from
// `seed` via fixed per-stage labels.
struct PipelineConfig {
    std::string name = "dataset";
    std::filesystem::path input;
    std::optional<std::filesystem::path> schema_sidecar;
    std::filesystem::path output_dir = "out";
    std::optional<std::string> label_column;
    std::string positive_label;
    std::uint64_t seed = 0;

    std::array<double, 3> split_ratios{0.4, 0.4, 0.2};
    bool stratify = true;

    bool prune_enabled = true;
    PruneMethod prune_method = PruneMethod::Signal;
    double prune_tau = 0.3;
    double rus_target_ratio = 0.5;
    std::size_t cc_clusters = 0;  // 0 = minority count

    ReorderMode reorder_mode = ReorderMode::PredictorLast;
    std::size_t importance_repeats = 5;

    GeneratorChoice generator = GeneratorChoice::Chain;
    ChainConfig chain;
    std::string bridge_command;  // empty = take PRRO_BRIDGE_CMD from the environment
    double max_reject_fraction = 0.5;

    std::size_t synthesis_n = 1000;
    std::vector<ClassifierKind> classifiers{ClassifierKind::LogisticRegression,
                                            ClassifierKind::DecisionTree,
                                            ClassifierKind::GaussianNb};
    double threshold = 0.5;
    double leakage_margin = 0.1;
};

PipelineConfig parse_pipeline_config(const std::string& text,
                                     const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string canonical_config_text(const PipelineConfig& config);

struct ArmResult {
    std::filesystem::path dir;
    std::optional<PruneReport> prune;
    LeakageReport leakage;
    ScenarioReport scenarios;
    double input_positive_rate = 0.0;      // rate of the generator's training input
    double synthetic_positive_rate = 0.0;  // after the degenerate-positive fix, if applied
    std::optional<double> discount;
    bool degenerate_fix_applied = false;
};

struct PipelineResult {
    std::filesystem::path output_dir;
    ArmResult treated;                  // the configured run
    std::optional<ArmResult> control;   // no prune / no reorder arm (--compare)
    std::optional<double> similarity_improvement;  // control minus treated discount, points
};

// Stage order: split, prune, reorder, encode+generate, inverse reorder,
// degenerate-positive fix, leakage check, evaluate, report. Outputs land in
// config.output_dir (per-arm subdirectories under --compare). Any stage
// error aborts with the stage name; earlier stages' files stay on disk.
PipelineResult run_pipeline(const PipelineConfig& config, bool compare = false);

}  // namespace prro
