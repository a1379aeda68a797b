#include "prro/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "prro/csv.hpp"
#include "prro/digest.hpp"
#include "prro/reordering.hpp"
#include "prro/rng.hpp"
#include "prro/version.hpp"

namespace prro {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string current;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    out.push_back(trim(current));
    return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "yes" || value == "1") return true;
    if (value == "false" || value == "no" || value == "0") return false;
    throw ValidationError("config key '" + key + "': expected a boolean, got \"" + value + "\"");
}

double parse_double(const std::string& value, const std::string& key) {
    const std::optional<double> v = parse_number(value);
    if (!v) {
        throw ValidationError("config key '" + key + "': expected a number, got \"" + value +
                              "\"");
    }
    return *v;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text,
                                     const std::filesystem::path& base_dir) {
    PipelineConfig config;
    bool name_set = false;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config: expected key = value, got \"" + line + "\"");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = strip_quotes(trim(line.substr(eq + 1)));

        auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return path.is_absolute() ? path : base_dir / path;
        };

        if (key == "name") {
            config.name = value;
            name_set = true;
        } else if (key == "input") {
            config.input = resolve(value);
        } else if (key == "schema") {
            config.schema_sidecar = resolve(value);
        } else if (key == "output") {
            config.output_dir = resolve(value);
        } else if (key == "label") {
            config.label_column = value;
        } else if (key == "positive") {
            config.positive_label = value;
        } else if (key == "seed") {
            config.seed = static_cast<std::uint64_t>(parse_double(value, key));
        } else if (key == "split.ratios") {
            const std::vector<std::string> parts = split_commas(value);
            if (parts.size() != 3) {
                throw ValidationError("split.ratios must list exactly 3 fractions");
            }
            for (std::size_t i = 0; i < 3; ++i) {
                config.split_ratios[i] = parse_double(parts[i], key);
            }
        } else if (key == "split.stratify") {
            config.stratify = parse_bool(value, key);
        } else if (key == "prune.enabled") {
            config.prune_enabled = parse_bool(value, key);
        } else if (key == "prune.method") {
            if (value == "signal") config.prune_method = PruneMethod::Signal;
            else if (value == "rus") config.prune_method = PruneMethod::RandomUndersample;
            else if (value == "cc") config.prune_method = PruneMethod::ClusterCentroids;
            else throw ValidationError("prune.method must be signal, rus, or cc");
        } else if (key == "prune.tau") {
            config.prune_tau = parse_double(value, key);
        } else if (key == "prune.rus_ratio") {
            config.rus_target_ratio = parse_double(value, key);
        } else if (key == "prune.cc_k") {
            config.cc_clusters = static_cast<std::size_t>(parse_double(value, key));
        } else if (key == "reorder.mode") {
            if (value == "predictor_last") config.reorder_mode = ReorderMode::PredictorLast;
            else if (value == "predictor_first") config.reorder_mode = ReorderMode::PredictorFirst;
            else if (value == "importance") config.reorder_mode = ReorderMode::Importance;
            else throw ValidationError(
                "reorder.mode must be predictor_last, predictor_first, or importance");
        } else if (key == "reorder.repeats") {
            config.importance_repeats = static_cast<std::size_t>(parse_double(value, key));
        } else if (key == "generator.kind") {
            if (value == "chain") config.generator = GeneratorChoice::Chain;
            else if (value == "bridge") config.generator = GeneratorChoice::Bridge;
            else throw ValidationError("generator.kind must be chain or bridge");
        } else if (key == "generator.bins") {
            config.chain.bins = static_cast<std::size_t>(parse_double(value, key));
        } else if (key == "generator.alpha") {
            config.chain.alpha = parse_double(value, key);
        } else if (key == "generator.sharpen") {
            config.chain.sharpen = parse_double(value, key);
        } else if (key == "generator.bridge_cmd") {
            config.bridge_command = value;
        } else if (key == "generator.max_reject_fraction") {
            config.max_reject_fraction = parse_double(value, key);
        } else if (key == "synthesis.n") {
            config.synthesis_n = static_cast<std::size_t>(parse_double(value, key));
        } else if (key == "eval.classifiers") {
            config.classifiers.clear();
            for (const std::string& cname : split_commas(value)) {
                const std::optional<ClassifierKind> kind = classifier_kind_from_name(cname);
                if (!kind) {
                    throw ValidationError("unknown classifier '" + cname + "'");
                }
                config.classifiers.push_back(*kind);
            }
        } else if (key == "eval.threshold") {
            config.threshold = parse_double(value, key);
        } else if (key == "leakage.margin") {
            config.leakage_margin = parse_double(value, key);
        } else {
            throw ValidationError("unknown config key '" + key + "'");
        }
    }

    if (config.input.empty()) {
        throw ValidationError("config must set input");
    }
    if (config.positive_label.empty()) {
        throw ValidationError("config must set positive");
    }
    if (config.synthesis_n < 1) {
        throw ValidationError("synthesis.n must be >= 1");
    }
    if (config.classifiers.empty()) {
        throw ValidationError("eval.classifiers must not be empty");
    }
    if (!name_set) {
        config.name = config.input.stem().string();
    }
    return config;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_pipeline_config(buf.str(), path.parent_path());
}

std::string canonical_config_text(const PipelineConfig& c) {
    std::ostringstream out;
    out << "name = " << c.name << '\n';
    out << "input = " << c.input.string() << '\n';
    if (c.schema_sidecar) out << "schema = " << c.schema_sidecar->string() << '\n';
    out << "output = " << c.output_dir.string() << '\n';
    if (c.label_column) out << "label = " << *c.label_column << '\n';
    out << "positive = " << c.positive_label << '\n';
    out << "seed = " << c.seed << '\n';
    out << "split.ratios = " << format_number(c.split_ratios[0]) << ","
        << format_number(c.split_ratios[1]) << "," << format_number(c.split_ratios[2]) << '\n';
    out << "split.stratify = " << (c.stratify ? "true" : "false") << '\n';
    out << "prune.enabled = " << (c.prune_enabled ? "true" : "false") << '\n';
    out << "prune.method = "
        << (c.prune_method == PruneMethod::Signal
                ? "signal"
                : c.prune_method == PruneMethod::RandomUndersample ? "rus" : "cc")
        << '\n';
    out << "prune.tau = " << format_number(c.prune_tau) << '\n';
    out << "prune.rus_ratio = " << format_number(c.rus_target_ratio) << '\n';
    out << "prune.cc_k = " << c.cc_clusters << '\n';
    out << "reorder.mode = "
        << (c.reorder_mode == ReorderMode::PredictorLast
                ? "predictor_last"
                : c.reorder_mode == ReorderMode::PredictorFirst ? "predictor_first"
                                                                : "importance")
        << '\n';
    out << "reorder.repeats = " << c.importance_repeats << '\n';
    out << "generator.kind = " << (c.generator == GeneratorChoice::Chain ? "chain" : "bridge")
        << '\n';
    out << "generator.bins = " << c.chain.bins << '\n';
    out << "generator.alpha = " << format_number(c.chain.alpha) << '\n';
    out << "generator.sharpen = " << format_number(c.chain.sharpen) << '\n';
    if (!c.bridge_command.empty()) out << "generator.bridge_cmd = " << c.bridge_command << '\n';
    out << "generator.max_reject_fraction = " << format_number(c.max_reject_fraction) << '\n';
    out << "synthesis.n = " << c.synthesis_n << '\n';
    out << "eval.classifiers = ";
    for (std::size_t i = 0; i < c.classifiers.size(); ++i) {
        if (i) out << ',';
        out << classifier_kind_name(c.classifiers[i]);
    }
    out << '\n';
    out << "eval.threshold = " << format_number(c.threshold) << '\n';
    out << "leakage.margin = " << format_number(c.leakage_margin) << '\n';
    return out.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

struct StageRecord {
    std::string name;
    std::uint64_t seed = 0;
    bool seeded = false;
    long long millis = 0;
    std::vector<std::pair<std::string, std::string>> outputs;  // file, digest
};

class StageClock {
public:
    StageClock() : start_(std::chrono::steady_clock::now()) {}
    long long millis() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// Runs one full arm (the treated run, or the control arm under --compare).
ArmResult run_arm(const PipelineConfig& config, const SplitBundle& bundle,
                  const std::filesystem::path& dir, bool apply_prro,
                  std::vector<StageRecord>& stages) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + dir.string() + "'");
    }

    ArmResult result;
    result.dir = dir;

    auto stage = [&](const std::string& name, std::optional<std::uint64_t> seed, auto&& body) {
        StageClock clock;
        try {
            body();
        } catch (const Error& e) {
            throw StageError(name, e.what());
        }
        StageRecord record;
        record.name = name;
        if (seed) {
            record.seed = *seed;
            record.seeded = true;
        }
        record.millis = clock.millis();
        stages.push_back(std::move(record));
    };

    // prune
    Dataset generator_input = bundle.generator_train;
    if (apply_prro && config.prune_enabled) {
        stage("prune",
              config.prune_method == PruneMethod::Signal
                  ? std::optional<std::uint64_t>{}
                  : std::optional<std::uint64_t>{derive_seed(config.seed, "prune")},
              [&] {
            std::ostringstream report_text;
            switch (config.prune_method) {
                case PruneMethod::Signal: {
                    PruningConfig prune_config;
                    prune_config.tau = config.prune_tau;
                    prune_config.interest_label = config.positive_label;
                    auto [pruned, report] = prune_signal(generator_input, prune_config);
                    generator_input = std::move(pruned);
                    result.prune = report;
                    report_text << "method=signal\n" << prune_report_text(report);
                    break;
                }
                case PruneMethod::RandomUndersample: {
                    const std::size_t before = generator_input.row_count();
                    generator_input =
                        random_undersample(generator_input, config.rus_target_ratio,
                                           derive_seed(config.seed, "prune"));
                    report_text << "method=rus\nsource_rows=" << before
                                << "\nkept=" << generator_input.row_count() << '\n';
                    break;
                }
                case PruneMethod::ClusterCentroids: {
                    const std::size_t before = generator_input.row_count();
                    std::size_t k = config.cc_clusters;
                    if (k == 0) k = minority_count(generator_input);  // balancing default
                    generator_input = cluster_centroids(generator_input, k,
                                                        derive_seed(config.seed, "prune"));
                    report_text << "method=cc\nsource_rows=" << before
                                << "\nkept=" << generator_input.row_count() << '\n';
                    break;
                }
            }
            write_text(dir / "prune_report.txt", report_text.str());
        });
    }
    result.input_positive_rate = positive_rate(generator_input, config.positive_label).value;

    // reorder
    Dataset reordered = generator_input;
    ColumnPermutation permutation;
    stage("reorder",
          apply_prro && config.reorder_mode == ReorderMode::Importance
              ? std::optional<std::uint64_t>{derive_seed(config.seed, "importance")}
              : std::optional<std::uint64_t>{},
          [&] {
        if (!apply_prro) {
            // control arm: keep the original column order
            permutation.forward.resize(generator_input.column_count());
            for (std::size_t i = 0; i < permutation.forward.size(); ++i) {
                permutation.forward[i] = i;
                permutation.original_names.push_back(generator_input.schema()[i].name);
            }
        } else {
            switch (config.reorder_mode) {
                case ReorderMode::PredictorLast:
                    std::tie(reordered, permutation) = reorder_predictor_last(generator_input);
                    break;
                case ReorderMode::PredictorFirst:
                    std::tie(reordered, permutation) = reorder_predictor_first(generator_input);
                    break;
                case ReorderMode::Importance: {
                    TrainConfig train_config;
                    train_config.positive_label = config.positive_label;
                    train_config.seed = derive_seed(config.seed, "importance_train");
                    const Classifier probe =
                        train_classifier(config.classifiers.front(), generator_input,
                                         train_config);
                    ImportanceOptions options;
                    options.seed = derive_seed(config.seed, "importance");
                    options.repeats = config.importance_repeats;
                    options.threshold = config.threshold;
                    std::tie(reordered, permutation) =
                        reorder_by_importance(generator_input, probe, options);
                    break;
                }
            }
        }
        save_permutation(permutation, dir / "column_permutation.txt");
    });

    // encode + generate
    Dataset synthetic_ordered;
    stage("generate", derive_seed(config.seed, "generate"), [&] {
        if (config.generator == GeneratorChoice::Chain) {
            const ChainModel model = fit_chain(reordered, config.chain);
            synthetic_ordered = sample(model, config.synthesis_n,
                                       derive_seed(config.seed, "generate"));
        } else {
            const std::filesystem::path bridge_dir = dir / "bridge";
            bridge_export(reordered, bridge_dir);
            std::string command = config.bridge_command;
            if (command.empty()) {
                if (const char* env = std::getenv("PRRO_BRIDGE_CMD")) command = env;
            }
            if (command.empty()) {
                throw ValidationError(
                    "bridge generator needs generator.bridge_cmd or PRRO_BRIDGE_CMD");
            }
            run_bridge_command(command, bridge_dir);
            ParsePolicy policy;
            policy.max_reject_fraction = config.max_reject_fraction;
            synthetic_ordered = bridge_import(bridge_dir, reordered.schema(), policy);
        }
    });

    // inverse reorder + degenerate-positive fix
    Dataset synthetic;
    stage("inverse_reorder", derive_seed(config.seed, "degenerate_fix"), [&] {
        synthetic = inverse_reorder(synthetic_ordered, permutation);
        const PositiveRate rate = positive_rate(synthetic, config.positive_label);
        if (!rate.empty && rate.value == 0.0) {
            synthetic = degenerate_positive_fix(synthetic, config.positive_label,
                                                derive_seed(config.seed, "degenerate_fix"));
            result.degenerate_fix_applied = true;
        }
        result.synthetic_positive_rate = positive_rate(synthetic, config.positive_label).value;
        save_csv(synthetic, dir / "synthetic.csv");
        save_schema_sidecar(synthetic.schema(), dir / "synthetic.schema",
                            config.positive_label);
    });
    if (result.input_positive_rate > 0.0) {
        result.discount = discount_rate(result.input_positive_rate,
                                        result.synthetic_positive_rate);
    }

    // leakage check against the generator's actual training rows
    stage("leakage", std::nullopt, [&] {
        result.leakage =
            leakage_check(synthetic, generator_input, bundle.holdout, config.leakage_margin);
        write_text(dir / "leakage_report.json", leakage_report_json(result.leakage));
    });

    // evaluate + report
    stage("evaluate", derive_seed(config.seed, "train"), [&] {
        EvaluationOptions options;
        options.threshold = config.threshold;
        options.train.seed = derive_seed(config.seed, "train");
        result.scenarios = evaluate_scenarios(bundle, synthetic, config.classifiers,
                                              config.positive_label, options);
        write_text(dir / "scenario_report.json", scenario_report_json(result.scenarios));
        write_text(dir / "report.csv", scenario_report_csv(result.scenarios, config.name));
    });

    return result;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, bool compare) {
    std::error_code probe_ec;
    if (!std::filesystem::exists(config.input, probe_ec)) {
        throw ValidationError("input '" + config.input.string() + "' does not exist");
    }
    if (config.schema_sidecar && !std::filesystem::exists(*config.schema_sidecar, probe_ec)) {
        throw ValidationError("schema sidecar '" + config.schema_sidecar->string() +
                              "' does not exist");
    }

    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + config.output_dir.string() + "'");
    }

    std::vector<StageRecord> stages;
    StageClock total_clock;

    // load
    Dataset dataset;
    {
        StageClock clock;
        try {
            dataset = load_csv_auto(config.input, config.schema_sidecar, config.label_column);
        } catch (const Error& e) {
            throw StageError("load", e.what());
        }
        StageRecord record;
        record.name = "load";
        record.millis = clock.millis();
        record.outputs.emplace_back(config.input.string(), digest_file(config.input));
        stages.push_back(std::move(record));
    }

    // split
    SplitBundle bundle;
    {
        StageClock clock;
        try {
            SplitOptions options;
            options.ratios = config.split_ratios;
            options.seed = derive_seed(config.seed, "split");
            options.stratified = config.stratify;
            bundle = split(dataset, options);
        } catch (const Error& e) {
            throw StageError("split", e.what());
        }
        StageRecord record;
        record.name = "split";
        record.seed = derive_seed(config.seed, "split");
        record.seeded = true;
        record.millis = clock.millis();
        stages.push_back(std::move(record));
    }

    PipelineResult result;
    result.output_dir = config.output_dir;
    if (compare) {
        result.treated = run_arm(config, bundle, config.output_dir / "prro", true, stages);
        result.control = run_arm(config, bundle, config.output_dir / "noprro", false, stages);
        if (result.treated.discount && result.control->discount) {
            result.similarity_improvement =
                (*result.control->discount - *result.treated.discount) * 100.0;
        }

        std::ostringstream table;
        table << "arm,input_positive_rate,synthetic_positive_rate,discount_rate\n";
        table << "noprro," << format_number(result.control->input_positive_rate) << ','
              << format_number(result.control->synthetic_positive_rate) << ','
              << (result.control->discount ? format_number(*result.control->discount) : "nan")
              << '\n';
        table << "prro," << format_number(result.treated.input_positive_rate) << ','
              << format_number(result.treated.synthetic_positive_rate) << ','
              << (result.treated.discount ? format_number(*result.treated.discount) : "nan")
              << '\n';
        if (result.similarity_improvement) {
            table << "similarity_improvement_points="
                  << format_number(*result.similarity_improvement) << '\n';
        }
        write_text(config.output_dir / "discount_comparison.txt", table.str());
    } else {
        result.treated = run_arm(config, bundle, config.output_dir, true, stages);
    }

    // manifest
    nlohmann::json stage_list = nlohmann::json::array();
    for (const StageRecord& record : stages) {
        nlohmann::json j{{"name", record.name}, {"millis", record.millis}};
        if (record.seeded) j["seed"] = record.seed;
        if (!record.outputs.empty()) {
            nlohmann::json outputs;
            for (const auto& [file, digest] : record.outputs) outputs[file] = digest;
            j["inputs"] = outputs;
        }
        stage_list.push_back(std::move(j));
    }

    auto arm_manifest = [](const ArmResult& arm) {
        nlohmann::json j{{"input_positive_rate", arm.input_positive_rate},
                         {"synthetic_positive_rate", arm.synthetic_positive_rate},
                         {"degenerate_fix_applied", arm.degenerate_fix_applied}};
        if (arm.discount) j["discount_rate"] = *arm.discount;
        nlohmann::json files;
        for (const char* name : {"synthetic.csv", "scenario_report.json", "report.csv",
                                 "prune_report.txt", "leakage_report.json"}) {
            const std::filesystem::path path = arm.dir / name;
            std::error_code exists_ec;
            if (std::filesystem::exists(path, exists_ec)) {
                files[name] = digest_file(path);
            }
        }
        j["outputs"] = std::move(files);
        return j;
    };

    nlohmann::json manifest{{"tool_version", kVersion},
                            {"config_digest", digest_string(canonical_config_text(config))},
                            {"root_seed", config.seed},
                            {"total_millis", total_clock.millis()},
                            {"stages", stage_list},
                            {"treated", arm_manifest(result.treated)}};
    if (result.control) {
        manifest["control"] = arm_manifest(*result.control);
        if (result.similarity_improvement) {
            manifest["similarity_improvement_points"] = *result.similarity_improvement;
        }
    }
    write_text(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
    return result;
}

}  // namespace prro
