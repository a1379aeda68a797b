// prro: pre-synthesis pipeline for tabular training data generation.
//
// Exit codes: 0 success, 1 usage error, 2 data/config validation error,
// 3 stage or I/O failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prro/csv.hpp"
#include "prro/encoding.hpp"
#include "prro/error.hpp"
#include "prro/evaluation.hpp"
#include "prro/generator.hpp"
#include "prro/pipeline.hpp"
#include "prro/pruning.hpp"
#include "prro/reordering.hpp"
#include "prro/rng.hpp"
#include "prro/table.hpp"
#include "prro/version.hpp"

namespace {

namespace fs = std::filesystem;

prro::Dataset load_input(const std::string& input, const std::string& schema,
                         const std::string& label) {
    std::optional<fs::path> sidecar;
    if (!schema.empty()) sidecar = fs::path(schema);
    std::optional<std::string> label_column;
    if (!label.empty()) label_column = label;
    return prro::load_csv_auto(input, sidecar, label_column);
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw prro::IoError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void add_input_options(CLI::App* cmd, std::string& input, std::string& schema,
                       std::string& label) {
    cmd->add_option("--input", input, "input CSV file")->required();
    cmd->add_option("--schema", schema, "schema sidecar file");
    cmd->add_option("--label", label, "label column (schema inference only)");
}

int run_command(const std::string& config_path, bool compare, const std::string& output_override,
                const std::optional<std::uint64_t>& seed_override) {
    prro::PipelineConfig config = prro::load_pipeline_config(config_path);
    if (!output_override.empty()) config.output_dir = output_override;
    if (seed_override) config.seed = *seed_override;
    const prro::PipelineResult result = prro::run_pipeline(config, compare);
    std::cout << "pipeline complete: " << result.output_dir.string() << '\n';
    if (result.control && result.similarity_improvement) {
        std::cout << "similarity improvement: " << prro::format_number(*result.similarity_improvement)
                  << " points\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PRRO pre-synthesis pipeline for tabular data"};
    app.set_version_flag("--version", std::string("prro ") + prro::kVersion);
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run the full pipeline from a config file");
    std::string run_config;
    std::string run_output;
    std::uint64_t run_seed = 0;
    bool run_compare = false;
    run->add_option("--config", run_config, "pipeline config file")->required();
    run->add_option("--output", run_output, "override the output directory");
    auto* run_seed_opt = run->add_option("--seed", run_seed, "override the root seed");
    run->add_flag("--compare", run_compare, "also run a no-PRRO control arm");

    // split
    auto* split_cmd = app.add_subcommand("split", "three-way train/holdout/validation split");
    std::string split_input, split_schema, split_label, split_output;
    std::vector<double> split_ratios{0.4, 0.4, 0.2};
    std::uint64_t split_seed = 0;
    bool no_stratify = false;
    add_input_options(split_cmd, split_input, split_schema, split_label);
    split_cmd->add_option("--ratios", split_ratios, "three split fractions")->expected(3);
    split_cmd->add_option("--seed", split_seed, "shuffle seed");
    split_cmd->add_flag("--no-stratify", no_stratify, "plain shuffling instead of per-class");
    split_cmd->add_option("--output", split_output, "output directory")->required();

    // prune
    auto* prune_cmd = app.add_subcommand("prune", "signal-based pruning or an undersampling baseline");
    std::string prune_input, prune_schema, prune_label, prune_output, prune_report_path;
    std::string prune_positive, prune_method = "signal";
    double prune_tau = 0.3, prune_rus_ratio = 0.5;
    std::size_t prune_cc_k = 0;
    std::uint64_t prune_seed = 0;
    add_input_options(prune_cmd, prune_input, prune_schema, prune_label);
    prune_cmd->add_option("--positive", prune_positive, "interest (positive) label")->required();
    prune_cmd->add_option("--tau", prune_tau, "correlation threshold");
    prune_cmd->add_option("--method", prune_method, "signal | rus | cc");
    prune_cmd->add_option("--rus-ratio", prune_rus_ratio, "target majority ratio (rus)");
    prune_cmd->add_option("--cc-k", prune_cc_k, "cluster count (cc; 0 = minority count)");
    prune_cmd->add_option("--seed", prune_seed, "seed (rus/cc)");
    prune_cmd->add_option("--output", prune_output, "pruned CSV path")->required();
    prune_cmd->add_option("--report", prune_report_path, "prune report path");

    // reorder
    auto* reorder_cmd = app.add_subcommand("reorder", "column conditional reordering");
    std::string reorder_input, reorder_schema, reorder_label, reorder_output;
    std::string reorder_mode = "predictor_last", reorder_perm, reorder_positive;
    std::uint64_t reorder_seed = 0;
    std::size_t reorder_repeats = 5;
    bool reorder_inverse = false;
    add_input_options(reorder_cmd, reorder_input, reorder_schema, reorder_label);
    reorder_cmd->add_option("--mode", reorder_mode,
                            "predictor_last | predictor_first | importance");
    reorder_cmd->add_option("--positive", reorder_positive, "positive label (importance mode)");
    reorder_cmd->add_option("--seed", reorder_seed, "seed (importance mode)");
    reorder_cmd->add_option("--repeats", reorder_repeats, "shuffle repeats (importance mode)");
    reorder_cmd->add_flag("--inverse", reorder_inverse, "apply the permutation's inverse");
    reorder_cmd->add_option("--permutation", reorder_perm, "permutation sidecar path")->required();
    reorder_cmd->add_option("--output", reorder_output, "output CSV path")->required();

    // encode
    auto* encode_cmd = app.add_subcommand("encode", "sentence encoding and decoding");
    std::string encode_input, encode_schema, encode_label, encode_output, encode_rejects;
    bool encode_decode = false, encode_placeholders = false;
    double encode_max_reject = 0.0;
    std::string on_unknown = "reject", on_numeric = "reject", on_missing = "reject";
    add_input_options(encode_cmd, encode_input, encode_schema, encode_label);
    encode_cmd->add_flag("--decode", encode_decode, "parse a corpus back into a CSV");
    encode_cmd->add_flag("--placeholder-names", encode_placeholders,
                         "use Column 1..k instead of real names");
    encode_cmd->add_option("--output", encode_output, "output path")->required();
    encode_cmd->add_option("--rejects", encode_rejects, "reject records path (decode)");
    encode_cmd->add_option("--max-reject-fraction", encode_max_reject,
                           "tolerated reject fraction (decode)");
    encode_cmd->add_option("--on-unknown-category", on_unknown, "reject | coerce | drop");
    encode_cmd->add_option("--on-numeric-fail", on_numeric, "reject | drop");
    encode_cmd->add_option("--on-missing-column", on_missing, "reject | drop");

    // generate
    auto* generate_cmd = app.add_subcommand("generate", "fit the chain generator and sample");
    std::string gen_input, gen_schema, gen_label, gen_output, gen_bridge_dir, gen_bridge_cmd;
    std::size_t gen_n = 1000, gen_bins = 8;
    double gen_alpha = 1.0, gen_sharpen = 1.0, gen_max_reject = 0.5;
    std::uint64_t gen_seed = 0;
    add_input_options(generate_cmd, gen_input, gen_schema, gen_label);
    generate_cmd->add_option("--n", gen_n, "rows to synthesize");
    generate_cmd->add_option("--seed", gen_seed, "sampling seed");
    generate_cmd->add_option("--bins", gen_bins, "quantile bins per numeric column");
    generate_cmd->add_option("--alpha", gen_alpha, "Laplace pseudo-count");
    generate_cmd->add_option("--sharpen", gen_sharpen, "sampling exponent (1 = off)");
    generate_cmd->add_option("--bridge-dir", gen_bridge_dir,
                             "use the external-generator bridge in this directory");
    generate_cmd->add_option("--bridge-cmd", gen_bridge_cmd,
                             "bridge command (default: PRRO_BRIDGE_CMD)");
    generate_cmd->add_option("--max-reject-fraction", gen_max_reject,
                             "tolerated reject fraction (bridge import)");
    generate_cmd->add_option("--output", gen_output, "synthetic CSV path")->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "replacement/appendant utility evaluation");
    std::string eval_train, eval_holdout, eval_validation, eval_synthetic, eval_schema;
    std::string eval_positive, eval_classifiers = "logistic_regression,decision_tree,gaussian_nb";
    std::string eval_output;
    double eval_threshold = 0.5;
    std::uint64_t eval_seed = 0;
    eval_cmd->add_option("--train", eval_train, "generator-train CSV")->required();
    eval_cmd->add_option("--holdout", eval_holdout, "holdout CSV")->required();
    eval_cmd->add_option("--validation", eval_validation, "validation CSV")->required();
    eval_cmd->add_option("--synthetic", eval_synthetic, "synthetic CSV")->required();
    eval_cmd->add_option("--schema", eval_schema, "schema sidecar");
    eval_cmd->add_option("--positive", eval_positive, "positive label")->required();
    eval_cmd->add_option("--classifiers", eval_classifiers, "comma-separated classifier kinds");
    eval_cmd->add_option("--threshold", eval_threshold, "decision threshold");
    eval_cmd->add_option("--seed", eval_seed, "training seed");
    eval_cmd->add_option("--output", eval_output, "scenario report JSON path")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "scenario JSON to plot-ready CSV");
    std::string report_input, report_output, report_dataset = "dataset";
    report_cmd->add_option("--input", report_input, "scenario report JSON")->required();
    report_cmd->add_option("--output", report_output, "CSV output path")->required();
    report_cmd->add_option("--dataset", report_dataset, "dataset name column value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // --help/--version exit 0, any usage error exits 1
    }

    try {
        if (run->parsed()) {
            std::optional<std::uint64_t> seed_override;
            if (run_seed_opt->count() > 0) seed_override = run_seed;
            return run_command(run_config, run_compare, run_output, seed_override);
        }

        if (split_cmd->parsed()) {
            const prro::Dataset dataset = load_input(split_input, split_schema, split_label);
            prro::SplitOptions options;
            options.ratios = {split_ratios[0], split_ratios[1], split_ratios[2]};
            options.seed = split_seed;
            options.stratified = !no_stratify;
            const prro::SplitBundle bundle = prro::split(dataset, options);
            const fs::path dir(split_output);
            std::error_code ec;
            fs::create_directories(dir, ec);
            prro::save_csv(bundle.generator_train, dir / "generator_train.csv");
            prro::save_csv(bundle.holdout, dir / "holdout.csv");
            prro::save_csv(bundle.validation, dir / "validation.csv");
            prro::save_schema_sidecar(dataset.schema(), dir / "schema.txt");
            std::cout << "split sizes: " << bundle.generator_train.row_count() << ", "
                      << bundle.holdout.row_count() << ", " << bundle.validation.row_count()
                      << '\n';
            return 0;
        }

        if (prune_cmd->parsed()) {
            const prro::Dataset dataset = load_input(prune_input, prune_schema, prune_label);
            prro::Dataset output;
            std::string report_text;
            if (prune_method == "signal") {
                prro::PruningConfig config;
                config.tau = prune_tau;
                config.interest_label = prune_positive;
                auto [pruned, report] = prro::prune_signal(dataset, config);
                output = std::move(pruned);
                report_text = "method=signal\n" + prro::prune_report_text(report);
            } else if (prune_method == "rus") {
                output = prro::random_undersample(dataset, prune_rus_ratio, prune_seed);
                report_text = "method=rus\nsource_rows=" + std::to_string(dataset.row_count()) +
                              "\nkept=" + std::to_string(output.row_count()) + "\n";
            } else if (prune_method == "cc") {
                std::size_t k = prune_cc_k;
                if (k == 0) k = prro::minority_count(dataset);
                output = prro::cluster_centroids(dataset, k, prune_seed);
                report_text = "method=cc\nsource_rows=" + std::to_string(dataset.row_count()) +
                              "\nkept=" + std::to_string(output.row_count()) + "\n";
            } else {
                std::cerr << "unknown prune method '" << prune_method << "'\n";
                return 1;
            }
            prro::save_csv(output, prune_output);
            if (!prune_report_path.empty()) {
                std::ofstream out(prune_report_path, std::ios::binary);
                out << report_text;
            }
            std::cout << report_text;
            return 0;
        }

        if (reorder_cmd->parsed()) {
            const prro::Dataset dataset = load_input(reorder_input, reorder_schema, reorder_label);
            if (reorder_inverse) {
                const prro::ColumnPermutation permutation = prro::load_permutation(reorder_perm);
                prro::save_csv(prro::inverse_reorder(dataset, permutation), reorder_output);
                return 0;
            }
            prro::Dataset reordered;
            prro::ColumnPermutation permutation;
            if (reorder_mode == "predictor_last") {
                std::tie(reordered, permutation) = prro::reorder_predictor_last(dataset);
            } else if (reorder_mode == "predictor_first") {
                std::tie(reordered, permutation) = prro::reorder_predictor_first(dataset);
            } else if (reorder_mode == "importance") {
                if (reorder_positive.empty()) {
                    std::cerr << "--positive is required for importance mode\n";
                    return 1;
                }
                prro::TrainConfig train_config;
                train_config.positive_label = reorder_positive;
                train_config.seed = reorder_seed;
                const prro::Classifier probe = prro::train_classifier(
                    prro::ClassifierKind::LogisticRegression, dataset, train_config);
                prro::ImportanceOptions options;
                options.seed = reorder_seed;
                options.repeats = reorder_repeats;
                std::tie(reordered, permutation) =
                    prro::reorder_by_importance(dataset, probe, options);
            } else {
                std::cerr << "unknown reorder mode '" << reorder_mode << "'\n";
                return 1;
            }
            prro::save_csv(reordered, reorder_output);
            prro::save_permutation(permutation, reorder_perm);
            return 0;
        }

        if (encode_cmd->parsed()) {
            prro::EncodeOptions options;
            options.placeholder_names = encode_placeholders;
            if (!encode_decode) {
                const prro::Dataset dataset = load_input(encode_input, encode_schema, encode_label);
                prro::save_corpus(prro::encode_dataset(dataset, options), encode_output);
                return 0;
            }
            if (encode_schema.empty()) {
                std::cerr << "--schema is required for --decode\n";
                return 1;
            }
            prro::ParsePolicy policy;
            policy.max_reject_fraction = encode_max_reject;
            if (on_unknown == "coerce") {
                policy.on_unknown_category = prro::ParsePolicy::OnUnknownCategory::CoerceToNearest;
            } else if (on_unknown == "drop") {
                policy.on_unknown_category = prro::ParsePolicy::OnUnknownCategory::DropRow;
            }
            if (on_numeric == "drop") {
                policy.on_numeric_parse_fail = prro::ParsePolicy::OnNumericParseFail::DropRow;
            }
            if (on_missing == "drop") {
                policy.on_missing_column = prro::ParsePolicy::OnMissingColumn::DropRow;
            }
            const prro::SchemaSidecar sidecar = prro::load_schema_sidecar(encode_schema);
            const prro::CorpusParseResult result = prro::parse_corpus(
                prro::load_corpus_lines(encode_input), sidecar.schema, policy, options);
            prro::save_csv(result.dataset, encode_output);
            if (!encode_rejects.empty()) {
                prro::save_rejects(result.rejects, encode_rejects);
            }
            std::cout << "accepted " << result.dataset.row_count() << " rows, rejected "
                      << result.rejects.size() << ", dropped " << result.dropped << '\n';
            return 0;
        }

        if (generate_cmd->parsed()) {
            const prro::Dataset dataset = load_input(gen_input, gen_schema, gen_label);
            prro::Dataset synthetic;
            if (!gen_bridge_dir.empty()) {
                prro::bridge_export(dataset, gen_bridge_dir);
                std::string command = gen_bridge_cmd;
                if (command.empty()) {
                    if (const char* env = std::getenv("PRRO_BRIDGE_CMD")) command = env;
                }
                if (command.empty()) {
                    std::cerr << "bridge mode needs --bridge-cmd or PRRO_BRIDGE_CMD\n";
                    return 1;
                }
                prro::run_bridge_command(command, gen_bridge_dir);
                prro::ParsePolicy policy;
                policy.max_reject_fraction = gen_max_reject;
                synthetic = prro::bridge_import(gen_bridge_dir, dataset.schema(), policy);
            } else {
                prro::ChainConfig config;
                config.bins = gen_bins;
                config.alpha = gen_alpha;
                config.sharpen = gen_sharpen;
                const prro::ChainModel model = prro::fit_chain(dataset, config);
                synthetic = prro::sample(model, gen_n, gen_seed);
            }
            prro::save_csv(synthetic, gen_output);
            return 0;
        }

        if (eval_cmd->parsed()) {
            std::optional<fs::path> sidecar;
            if (!eval_schema.empty()) sidecar = fs::path(eval_schema);
            prro::SplitBundle bundle;
            bundle.generator_train = prro::load_csv_auto(eval_train, sidecar);
            bundle.holdout = prro::load_csv_auto(eval_holdout, sidecar);
            bundle.validation = prro::load_csv_auto(eval_validation, sidecar);
            const prro::Dataset synthetic = prro::load_csv_auto(eval_synthetic, sidecar);

            std::vector<prro::ClassifierKind> kinds;
            std::stringstream names(eval_classifiers);
            std::string piece;
            while (std::getline(names, piece, ',')) {
                const auto kind = prro::classifier_kind_from_name(piece);
                if (!kind) {
                    std::cerr << "unknown classifier '" << piece << "'\n";
                    return 1;
                }
                kinds.push_back(*kind);
            }
            prro::EvaluationOptions options;
            options.threshold = eval_threshold;
            options.train.seed = eval_seed;
            const prro::ScenarioReport report =
                prro::evaluate_scenarios(bundle, synthetic, kinds, eval_positive, options);
            std::ofstream out(eval_output, std::ios::binary);
            out << prro::scenario_report_json(report);
            return 0;
        }

        if (report_cmd->parsed()) {
            const prro::ScenarioReport report =
                prro::scenario_report_from_json(read_text_file(report_input));
            std::ofstream out(report_output, std::ios::binary);
            out << prro::scenario_report_csv(report, report_dataset);
            return 0;
        }
    } catch (const prro::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const prro::StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const prro::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
