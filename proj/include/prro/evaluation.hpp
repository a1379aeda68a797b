#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prro/table.hpp"

namespace prro {

enum class ClassifierKind { LogisticRegression, DecisionTree, GaussianNb };

const char* classifier_kind_name(ClassifierKind kind);
std::optional<ClassifierKind> classifier_kind_from_name(std::string_view name);

struct TrainConfig {
    std::string positive_label;
    std::uint64_t seed = 0;
    // logistic regression (full-batch gradient descent on cross-entropy)
    double learning_rate = 0.5;
    std::size_t max_iterations = 4000;
    double gradient_tolerance = 1e-7;
    // decision tree
    std::size_t max_depth = 8;
    std::size_t min_leaf = 5;
};

// Row-major dense matrix for the numeric cores.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

// Cross-entropy objective for logistic regression on a design matrix whose
// last column is the bias term. Exposed so the gradient can be checked
// against finite differences.
struct LogisticCore {
    static double loss(const Matrix& x, std::span<const double> y, std::span<const double> w);
    static std::vector<double> gradient(const Matrix& x, std::span<const double> y,
                                        std::span<const double> w);
};

class ClassifierImpl;

// A trained binary classifier producing positive-class probabilities.
// Deterministic given its parameters; immutable once trained.
class Classifier {
public:
    ClassifierKind kind() const;
    const Schema& schema_binding() const;
    const std::string& positive_label() const;
    std::vector<double> predict_proba(const Dataset& dataset) const;

private:
    friend Classifier train_classifier(ClassifierKind, const Dataset&, const TrainConfig&);
    std::shared_ptr<const ClassifierImpl> impl_;
};

Classifier train_classifier(ClassifierKind kind, const Dataset& train, const TrainConfig& config);

struct MetricReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    double cross_entropy = 0.0;  // nats, clipped at 1e-12
    double accuracy = 0.0;
    bool precision_defined = true;  // false when nothing was predicted positive
    bool recall_defined = true;     // false when the validation set has no positives
    bool f1_defined = true;
    bool auc_defined = true;  // false when a class is absent
    std::size_t n_validation = 0;
};

// Threshold rule: predicted positive iff score > threshold. AUC is the
// Mann-Whitney pair statistic with ties credited 0.5, computed via average
// ranks.
MetricReport metrics_from_scores(std::span<const double> scores, std::span<const int> labels,
                                 double threshold);
MetricReport metrics(const Classifier& classifier, const Dataset& validation,
                     std::string_view positive_label, double threshold = 0.5);

double auc_from_scores(std::span<const double> scores, std::span<const int> labels);

enum class Scenario { Replacement, Appendant };

const char* scenario_name(Scenario scenario);

// Differences are target minus baseline, fieldwise. Loss follows the
// lower-is-better convention; the accuracy-style metrics are
// higher-is-better.
struct UtilityReport {
    Scenario scenario = Scenario::Replacement;
    double loss_difference = 0.0;
    double precision_difference = 0.0;
    double recall_difference = 0.0;
    double f1_difference = 0.0;
    double auc_difference = 0.0;
    double accuracy_difference = 0.0;
    MetricReport baseline;
};

UtilityReport utility(const MetricReport& target, const MetricReport& baseline,
                      Scenario scenario);

struct ScenarioArm {
    std::optional<MetricReport> report;
    std::optional<UtilityReport> utility;
    std::string error;  // set instead of report when training/metrics failed
};

struct ScenarioOutcome {
    ClassifierKind kind = ClassifierKind::LogisticRegression;
    ScenarioArm baseline;     // trained on the original data
    ScenarioArm replacement;  // trained on the synthetic data alone
    ScenarioArm appendant;    // trained on original + synthetic
};

struct ScenarioReport {
    std::vector<ScenarioOutcome> outcomes;
    std::size_t n_validation = 0;
    std::string positive_label;
    double threshold = 0.5;
};

struct EvaluationOptions {
    double threshold = 0.5;
    TrainConfig train;  // positive_label is filled in by evaluate_scenarios
};

// Trains, per classifier kind, a baseline on the original data (generator
// train + holdout), a replacement model on the synthetic data, and an
// appendant model on their concatenation, and scores all three on the
// validation set. Per-arm failures are captured as annotated errors rather
// than aborting the other arms.
ScenarioReport evaluate_scenarios(const SplitBundle& bundle, const Dataset& synthetic,
                                  const std::vector<ClassifierKind>& kinds,
                                  const std::string& positive_label,
                                  const EvaluationOptions& options = {});

// When the dataset has no positive rows, relabels one seed-chosen row as
// positive; otherwise returns the dataset unchanged.
Dataset degenerate_positive_fix(const Dataset& synthetic, std::string_view positive_label,
                                std::uint64_t seed);

// Relative shrinkage of the positive rate from original to synthetic;
// negative when the synthetic rate overshoots.
double discount_rate(double original_rate, double synthetic_rate);

std::string scenario_report_json(const ScenarioReport& report);
ScenarioReport scenario_report_from_json(const std::string& text);

// Flat (dataset, scenario, classifier, metric, baseline, target, difference)
// rows for plotting.
std::string scenario_report_csv(const ScenarioReport& report, std::string_view dataset_name);

}  // namespace prro
