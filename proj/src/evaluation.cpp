#include "prro/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "prro/csv.hpp"
#include "prro/rng.hpp"

namespace prro {

namespace {

constexpr double kProbClip = 1e-12;

double clip_probability(double p) {
    return std::clamp(p, kProbClip, 1.0 - kProbClip);
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

enum class FeatureEncoding { OneHot, Ordinal };

// Maps schema-typed rows onto a dense design matrix. Categorical columns
// expand to one-hot blocks (logistic regression, decision tree) or a single
// ordinal code (Gaussian NB). Category lookup goes through strings so a
// dataset whose category lists extend the training schema still encodes.
struct Featurizer {
    Schema schema;
    FeatureEncoding encoding = FeatureEncoding::OneHot;
    std::vector<std::size_t> feature_cols;
    std::vector<std::size_t> offsets;
    std::size_t width = 0;

    Featurizer() = default;
    Featurizer(const Schema& s, FeatureEncoding enc) : schema(s), encoding(enc) {
        feature_cols = schema.feature_indices();
        offsets.resize(feature_cols.size());
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            offsets[f] = width;
            const ColumnSchema& col = schema[feature_cols[f]];
            if (col.kind == ColumnKind::Numeric || encoding == FeatureEncoding::Ordinal) {
                width += 1;
            } else {
                width += col.categories.size();
            }
        }
    }

    // with_bias appends a constant-1 column (logistic regression).
    Matrix encode(const Dataset& dataset, bool with_bias) const {
        const Dataset imputed = impute_median_mode(dataset);
        const Schema& in = imputed.schema();
        if (!in.same_layout(schema)) {
            throw ValidationError("dataset layout does not match the classifier's schema");
        }
        // Per categorical column: input category index -> training index (or -1).
        std::vector<std::vector<std::int32_t>> remap(feature_cols.size());
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            const ColumnSchema& train_col = schema[feature_cols[f]];
            if (train_col.kind != ColumnKind::Categorical) continue;
            const ColumnSchema& in_col = in[feature_cols[f]];
            remap[f].resize(in_col.categories.size(), -1);
            for (std::size_t i = 0; i < in_col.categories.size(); ++i) {
                if (auto idx = train_col.category_index(in_col.categories[i])) {
                    remap[f][i] = *idx;
                }
            }
        }

        Matrix m;
        m.rows = imputed.row_count();
        m.cols = width + (with_bias ? 1 : 0);
        m.data.assign(m.rows * m.cols, 0.0);
        for (std::size_t r = 0; r < m.rows; ++r) {
            for (std::size_t f = 0; f < feature_cols.size(); ++f) {
                const Cell& cell = imputed.cell(r, feature_cols[f]);
                const ColumnSchema& col = schema[feature_cols[f]];
                if (col.kind == ColumnKind::Numeric) {
                    m.at(r, offsets[f]) = cell.is_missing() ? 0.0 : cell.number();
                } else {
                    const std::int32_t mapped =
                        cell.is_missing() ? -1
                                          : remap[f][static_cast<std::size_t>(cell.category())];
                    if (encoding == FeatureEncoding::Ordinal) {
                        m.at(r, offsets[f]) = static_cast<double>(mapped);
                    } else if (mapped >= 0) {
                        m.at(r, offsets[f] + static_cast<std::size_t>(mapped)) = 1.0;
                    }
                }
            }
            if (with_bias) m.at(r, m.cols - 1) = 1.0;
        }
        return m;
    }
};

std::vector<double> binary_labels(const Dataset& dataset, std::string_view positive_label,
                                  const char* op) {
    const ColumnSchema& label_col = dataset.schema().label();
    if (label_col.kind != ColumnKind::Categorical) {
        throw ValidationError(std::string(op) + " requires a categorical label column");
    }
    const std::optional<std::int32_t> positive = label_col.category_index(positive_label);
    if (!positive) {
        throw ValidationError(std::string(op) + ": unknown positive label '" +
                              std::string(positive_label) + "'");
    }
    const std::size_t label_idx = dataset.schema().label_index();
    std::vector<double> y(dataset.row_count());
    for (std::size_t r = 0; r < dataset.row_count(); ++r) {
        const Cell& cell = dataset.cell(r, label_idx);
        if (cell.is_missing()) {
            throw ValidationError(std::string(op) + ": row " + std::to_string(r) +
                                  " has a missing label");
        }
        y[r] = cell.category() == *positive ? 1.0 : 0.0;
    }
    return y;
}

}  // namespace

double LogisticCore::loss(const Matrix& x, std::span<const double> y,
                          std::span<const double> w) {
    double total = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        double z = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c) z += x.at(r, c) * w[c];
        const double p = clip_probability(sigmoid(z));
        total += -(y[r] * std::log(p) + (1.0 - y[r]) * std::log(1.0 - p));
    }
    return total / static_cast<double>(x.rows);
}

std::vector<double> LogisticCore::gradient(const Matrix& x, std::span<const double> y,
                                           std::span<const double> w) {
    std::vector<double> g(x.cols, 0.0);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double z = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c) z += x.at(r, c) * w[c];
        const double residual = sigmoid(z) - y[r];
        for (std::size_t c = 0; c < x.cols; ++c) g[c] += residual * x.at(r, c);
    }
    for (double& v : g) v /= static_cast<double>(x.rows);
    return g;
}

namespace {

struct LogisticModel {
    std::vector<double> weights;        // standardized space, bias last
    std::vector<double> means, scales;  // feature standardization

    void standardize(Matrix& x) const {
        for (std::size_t r = 0; r < x.rows; ++r) {
            for (std::size_t c = 0; c + 1 < x.cols; ++c) {
                x.at(r, c) = (x.at(r, c) - means[c]) / scales[c];
            }
        }
    }

    void fit(Matrix x, const std::vector<double>& y, const TrainConfig& config) {
        const std::size_t d = x.cols;
        means.assign(d - 1, 0.0);
        scales.assign(d - 1, 1.0);
        for (std::size_t c = 0; c + 1 < d; ++c) {
            double sum = 0.0, sq = 0.0;
            for (std::size_t r = 0; r < x.rows; ++r) {
                sum += x.at(r, c);
                sq += x.at(r, c) * x.at(r, c);
            }
            const double n = static_cast<double>(x.rows);
            means[c] = sum / n;
            const double var = std::max(sq / n - means[c] * means[c], 0.0);
            if (var > 0.0) scales[c] = std::sqrt(var);
        }
        standardize(x);

        weights.assign(d, 0.0);
        double step = config.learning_rate;
        double best_loss = LogisticCore::loss(x, y, weights);
        for (std::size_t iter = 0; iter < config.max_iterations && step > 1e-12; ++iter) {
            const std::vector<double> g = LogisticCore::gradient(x, y, weights);
            double g_inf = 0.0;
            for (double v : g) g_inf = std::max(g_inf, std::abs(v));
            if (g_inf < config.gradient_tolerance) break;

            std::vector<double> next = weights;
            for (std::size_t c = 0; c < d; ++c) next[c] -= step * g[c];
            const double next_loss = LogisticCore::loss(x, y, next);
            if (next_loss > best_loss + 1e-12) {
                step *= 0.5;  // overshoot; retry with a smaller step
                continue;
            }
            weights = std::move(next);
            best_loss = next_loss;
        }
    }

    std::vector<double> predict(Matrix x) const {
        standardize(x);
        std::vector<double> p(x.rows);
        for (std::size_t r = 0; r < x.rows; ++r) {
            double z = 0.0;
            for (std::size_t c = 0; c < x.cols; ++c) z += x.at(r, c) * weights[c];
            p[r] = sigmoid(z);
        }
        return p;
    }
};

// CART with Gini impurity, midpoint thresholds, and deterministic
// first-wins tie breaking.
struct TreeModel {
    struct Node {
        bool leaf = true;
        double probability = 0.0;
        std::size_t feature = 0;
        double threshold = 0.0;
        std::size_t left = 0, right = 0;
    };
    std::vector<Node> nodes;

    static double gini(std::size_t pos, std::size_t n) {
        if (n == 0) return 0.0;
        const double p = static_cast<double>(pos) / static_cast<double>(n);
        return 2.0 * p * (1.0 - p);
    }

    std::size_t build(const Matrix& x, const std::vector<double>& y,
                      std::vector<std::size_t> idx, std::size_t depth,
                      const TrainConfig& config) {
        std::size_t pos = 0;
        for (std::size_t i : idx) pos += y[i] > 0.5 ? 1 : 0;
        const std::size_t node_id = nodes.size();
        nodes.push_back(Node{});
        nodes[node_id].probability =
            idx.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(idx.size());

        if (depth >= config.max_depth || idx.size() < 2 * config.min_leaf || pos == 0 ||
            pos == idx.size()) {
            return node_id;
        }

        double best_impurity = gini(pos, idx.size());
        std::size_t best_feature = 0;
        double best_threshold = 0.0;
        bool found = false;

        std::vector<std::size_t> sorted = idx;
        for (std::size_t f = 0; f < x.cols; ++f) {
            std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                return x.at(a, f) < x.at(b, f);
            });
            std::size_t left_pos = 0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                left_pos += y[sorted[i]] > 0.5 ? 1 : 0;
                const double v = x.at(sorted[i], f);
                const double next = x.at(sorted[i + 1], f);
                if (v == next) continue;
                const std::size_t n_left = i + 1;
                const std::size_t n_right = sorted.size() - n_left;
                if (n_left < config.min_leaf || n_right < config.min_leaf) continue;
                const double w_left = static_cast<double>(n_left) / static_cast<double>(sorted.size());
                const double impurity = w_left * gini(left_pos, n_left) +
                                        (1.0 - w_left) * gini(pos - left_pos, n_right);
                if (impurity + 1e-12 < best_impurity) {
                    best_impurity = impurity;
                    best_feature = f;
                    best_threshold = 0.5 * (v + next);
                    found = true;
                }
            }
        }
        if (!found) return node_id;

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx) {
            (x.at(i, best_feature) < best_threshold ? left_idx : right_idx).push_back(i);
        }
        nodes[node_id].leaf = false;
        nodes[node_id].feature = best_feature;
        nodes[node_id].threshold = best_threshold;
        const std::size_t left = build(x, y, std::move(left_idx), depth + 1, config);
        nodes[node_id].left = left;
        const std::size_t right = build(x, y, std::move(right_idx), depth + 1, config);
        nodes[node_id].right = right;
        return node_id;
    }

    void fit(const Matrix& x, const std::vector<double>& y, const TrainConfig& config) {
        nodes.clear();
        std::vector<std::size_t> idx(x.rows);
        std::iota(idx.begin(), idx.end(), 0);
        build(x, y, std::move(idx), 0, config);
    }

    std::vector<double> predict(const Matrix& x) const {
        std::vector<double> p(x.rows);
        for (std::size_t r = 0; r < x.rows; ++r) {
            std::size_t node = 0;
            while (!nodes[node].leaf) {
                node = x.at(r, nodes[node].feature) < nodes[node].threshold ? nodes[node].left
                                                                            : nodes[node].right;
            }
            p[r] = nodes[node].probability;
        }
        return p;
    }
};

struct GaussianNbModel {
    double log_prior_pos = 0.0, log_prior_neg = 0.0;
    std::vector<double> mean_pos, var_pos, mean_neg, var_neg;

    void fit(const Matrix& x, const std::vector<double>& y) {
        const std::size_t d = x.cols;
        mean_pos.assign(d, 0.0);
        mean_neg.assign(d, 0.0);
        var_pos.assign(d, 0.0);
        var_neg.assign(d, 0.0);
        std::size_t n_pos = 0;
        for (double v : y) n_pos += v > 0.5 ? 1 : 0;
        const std::size_t n_neg = y.size() - n_pos;
        log_prior_pos = std::log(static_cast<double>(n_pos) / static_cast<double>(y.size()));
        log_prior_neg = std::log(static_cast<double>(n_neg) / static_cast<double>(y.size()));

        for (std::size_t r = 0; r < x.rows; ++r) {
            auto& mean = y[r] > 0.5 ? mean_pos : mean_neg;
            for (std::size_t c = 0; c < d; ++c) mean[c] += x.at(r, c);
        }
        for (std::size_t c = 0; c < d; ++c) {
            mean_pos[c] /= static_cast<double>(n_pos);
            mean_neg[c] /= static_cast<double>(n_neg);
        }
        for (std::size_t r = 0; r < x.rows; ++r) {
            auto& mean = y[r] > 0.5 ? mean_pos : mean_neg;
            auto& var = y[r] > 0.5 ? var_pos : var_neg;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = x.at(r, c) - mean[c];
                var[c] += diff * diff;
            }
        }
        double max_var = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            var_pos[c] /= static_cast<double>(n_pos);
            var_neg[c] /= static_cast<double>(n_neg);
            max_var = std::max({max_var, var_pos[c], var_neg[c]});
        }
        const double floor = 1e-9 * std::max(max_var, 1.0);
        for (std::size_t c = 0; c < d; ++c) {
            var_pos[c] += floor;
            var_neg[c] += floor;
        }
    }

    std::vector<double> predict(const Matrix& x) const {
        std::vector<double> p(x.rows);
        for (std::size_t r = 0; r < x.rows; ++r) {
            double log_pos = log_prior_pos, log_neg = log_prior_neg;
            for (std::size_t c = 0; c < x.cols; ++c) {
                const double v = x.at(r, c);
                const double dp = v - mean_pos[c];
                const double dn = v - mean_neg[c];
                log_pos += -0.5 * (std::log(2.0 * M_PI * var_pos[c]) + dp * dp / var_pos[c]);
                log_neg += -0.5 * (std::log(2.0 * M_PI * var_neg[c]) + dn * dn / var_neg[c]);
            }
            const double m = std::max(log_pos, log_neg);
            const double denom = std::exp(log_pos - m) + std::exp(log_neg - m);
            p[r] = std::exp(log_pos - m) / denom;
        }
        return p;
    }
};

}  // namespace

class ClassifierImpl {
public:
    ClassifierKind kind = ClassifierKind::LogisticRegression;
    Schema schema;
    std::string positive_label;
    Featurizer featurizer;
    LogisticModel logistic;
    TreeModel tree;
    GaussianNbModel nb;

    std::vector<double> predict(const Dataset& dataset) const {
        switch (kind) {
            case ClassifierKind::LogisticRegression:
                return logistic.predict(featurizer.encode(dataset, /*with_bias=*/true));
            case ClassifierKind::DecisionTree:
                return tree.predict(featurizer.encode(dataset, /*with_bias=*/false));
            case ClassifierKind::GaussianNb:
                return nb.predict(featurizer.encode(dataset, /*with_bias=*/false));
        }
        throw Error("unreachable classifier kind");
    }
};

ClassifierKind Classifier::kind() const { return impl_->kind; }
const Schema& Classifier::schema_binding() const { return impl_->schema; }
const std::string& Classifier::positive_label() const { return impl_->positive_label; }

std::vector<double> Classifier::predict_proba(const Dataset& dataset) const {
    return impl_->predict(dataset);
}

const char* classifier_kind_name(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::LogisticRegression: return "logistic_regression";
        case ClassifierKind::DecisionTree: return "decision_tree";
        case ClassifierKind::GaussianNb: return "gaussian_nb";
    }
    return "unknown";
}

std::optional<ClassifierKind> classifier_kind_from_name(std::string_view name) {
    if (name == "logistic_regression" || name == "lr") return ClassifierKind::LogisticRegression;
    if (name == "decision_tree" || name == "dt") return ClassifierKind::DecisionTree;
    if (name == "gaussian_nb" || name == "gnb") return ClassifierKind::GaussianNb;
    return std::nullopt;
}

Classifier train_classifier(ClassifierKind kind, const Dataset& train,
                            const TrainConfig& config) {
    if (train.row_count() == 0) {
        throw ValidationError("cannot train on an empty dataset");
    }
    const std::vector<double> y = binary_labels(train, config.positive_label, "train_classifier");
    std::size_t n_pos = 0;
    for (double v : y) n_pos += v > 0.5 ? 1 : 0;
    if (n_pos == 0 || n_pos == y.size()) {
        throw ValidationError(
            "training set has a single class; apply degenerate_positive_fix to the synthetic "
            "data first");
    }

    auto impl = std::make_shared<ClassifierImpl>();
    impl->kind = kind;
    impl->schema = train.schema();
    impl->positive_label = config.positive_label;
    const FeatureEncoding encoding =
        kind == ClassifierKind::GaussianNb ? FeatureEncoding::Ordinal : FeatureEncoding::OneHot;
    impl->featurizer = Featurizer(train.schema(), encoding);

    switch (kind) {
        case ClassifierKind::LogisticRegression:
            impl->logistic.fit(impl->featurizer.encode(train, true), y, config);
            break;
        case ClassifierKind::DecisionTree:
            impl->tree.fit(impl->featurizer.encode(train, false), y, config);
            break;
        case ClassifierKind::GaussianNb:
            impl->nb.fit(impl->featurizer.encode(train, false), y);
            break;
    }
    Classifier classifier;
    classifier.impl_ = std::move(impl);
    return classifier;
}

double auc_from_scores(std::span<const double> scores, std::span<const int> labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks give tied pairs the 0.5 credit directly.
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = shared;
        i = j + 1;
    }

    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (labels[r] == 1) {
            rank_sum_pos += rank[r];
            ++n_pos;
        }
    }
    const std::size_t n_neg = n - n_pos;
    const double pairs = static_cast<double>(n_pos) * static_cast<double>(n_neg);
    return (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
           pairs;
}

MetricReport metrics_from_scores(std::span<const double> scores, std::span<const int> labels,
                                 double threshold) {
    if (scores.size() != labels.size()) {
        throw ValidationError("scores and labels differ in length");
    }
    if (scores.empty()) {
        throw ValidationError("metrics require a non-empty validation set");
    }
    MetricReport report;
    report.n_validation = scores.size();

    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double ce = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] > threshold;
        const bool actual = labels[i] == 1;
        if (predicted && actual) ++tp;
        else if (predicted) ++fp;
        else if (actual) ++fn;
        else ++tn;
        const double p = clip_probability(scores[i]);
        ce += actual ? -std::log(p) : -std::log(1.0 - p);
    }
    report.cross_entropy = ce / static_cast<double>(scores.size());
    report.accuracy =
        static_cast<double>(tp + tn) / static_cast<double>(scores.size());

    if (tp + fp > 0) {
        report.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    } else {
        report.precision_defined = false;
    }
    if (tp + fn > 0) {
        report.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    } else {
        report.recall_defined = false;
    }
    if (report.precision_defined && report.recall_defined &&
        report.precision + report.recall > 0.0) {
        report.f1 = 2.0 * report.precision * report.recall / (report.precision + report.recall);
    } else {
        report.f1_defined = false;
    }

    const std::size_t n_pos = tp + fn;
    const std::size_t n_neg = fp + tn;
    if (n_pos > 0 && n_neg > 0) {
        report.auc = auc_from_scores(scores, labels);
    } else {
        report.auc_defined = false;
    }
    return report;
}

MetricReport metrics(const Classifier& classifier, const Dataset& validation,
                     std::string_view positive_label, double threshold) {
    if (classifier.positive_label() != positive_label) {
        throw ValidationError("classifier was trained with positive label '" +
                              classifier.positive_label() + "', metrics asked for '" +
                              std::string(positive_label) + "'");
    }
    const std::vector<double> scores = classifier.predict_proba(validation);
    const std::vector<double> y = binary_labels(validation, positive_label, "metrics");
    std::vector<int> labels(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) labels[i] = y[i] > 0.5 ? 1 : 0;
    return metrics_from_scores(scores, labels, threshold);
}

const char* scenario_name(Scenario scenario) {
    return scenario == Scenario::Replacement ? "replacement" : "appendant";
}

UtilityReport utility(const MetricReport& target, const MetricReport& baseline,
                      Scenario scenario) {
    if (target.n_validation != baseline.n_validation) {
        throw ValidationError("utility requires reports from the same validation set");
    }
    UtilityReport report;
    report.scenario = scenario;
    report.loss_difference = target.cross_entropy - baseline.cross_entropy;
    report.precision_difference = target.precision - baseline.precision;
    report.recall_difference = target.recall - baseline.recall;
    report.f1_difference = target.f1 - baseline.f1;
    report.auc_difference = target.auc - baseline.auc;
    report.accuracy_difference = target.accuracy - baseline.accuracy;
    report.baseline = baseline;
    return report;
}

ScenarioReport evaluate_scenarios(const SplitBundle& bundle, const Dataset& synthetic,
                                  const std::vector<ClassifierKind>& kinds,
                                  const std::string& positive_label,
                                  const EvaluationOptions& options) {
    if (!synthetic.schema().same_layout(bundle.generator_train.schema())) {
        throw ValidationError(
            "synthetic schema does not match the split bundle (was inverse_reorder applied?)");
    }
    const Dataset original = concat(bundle.generator_train, bundle.holdout);
    const Dataset& validation = bundle.validation;

    TrainConfig train_config = options.train;
    train_config.positive_label = positive_label;

    ScenarioReport report;
    report.n_validation = validation.row_count();
    report.positive_label = positive_label;
    report.threshold = options.threshold;

    for (ClassifierKind kind : kinds) {
        ScenarioOutcome outcome;
        outcome.kind = kind;

        auto run_arm = [&](const Dataset& train, Scenario scenario,
                           ScenarioArm& arm, const MetricReport* baseline) {
            const std::string tag =
                std::string(scenario_name(scenario)) + "/" + classifier_kind_name(kind);
            try {
                const Classifier model = train_classifier(kind, train, train_config);
                arm.report = metrics(model, validation, positive_label, options.threshold);
                if (baseline) {
                    arm.utility = utility(*arm.report, *baseline, scenario);
                }
            } catch (const Error& e) {
                arm.report.reset();
                arm.error = tag + ": " + e.what();
            }
        };

        try {
            const Classifier baseline_model = train_classifier(kind, original, train_config);
            outcome.baseline.report =
                metrics(baseline_model, validation, positive_label, options.threshold);
        } catch (const Error& e) {
            outcome.baseline.error =
                std::string("baseline/") + classifier_kind_name(kind) + ": " + e.what();
        }
        const MetricReport* baseline =
            outcome.baseline.report ? &*outcome.baseline.report : nullptr;

        run_arm(synthetic, Scenario::Replacement, outcome.replacement, baseline);
        run_arm(concat(original, synthetic), Scenario::Appendant, outcome.appendant, baseline);
        report.outcomes.push_back(std::move(outcome));
    }
    return report;
}

Dataset degenerate_positive_fix(const Dataset& synthetic, std::string_view positive_label,
                                std::uint64_t seed) {
    if (synthetic.row_count() == 0) {
        throw ValidationError("degenerate_positive_fix requires a non-empty dataset");
    }
    const ColumnSchema& label_col = synthetic.schema().label();
    const std::optional<std::int32_t> positive = label_col.category_index(positive_label);
    if (!positive) {
        throw ValidationError("unknown positive label '" + std::string(positive_label) + "'");
    }
    const std::size_t label_idx = synthetic.schema().label_index();
    for (const Row& row : synthetic.rows()) {
        if (!row[label_idx].is_missing() && row[label_idx].category() == *positive) {
            return synthetic;  // already has a positive
        }
    }
    Rng rng(seed);
    const std::size_t chosen = rng.next_index(synthetic.row_count());
    std::vector<Row> rows = synthetic.rows();
    rows[chosen][label_idx] = Cell::category(*positive);
    return Dataset(synthetic.schema(), std::move(rows));
}

double discount_rate(double original_rate, double synthetic_rate) {
    if (!(original_rate > 0.0)) {
        throw ValidationError("discount_rate requires a positive original rate");
    }
    return (original_rate - synthetic_rate) / original_rate;
}

namespace {

nlohmann::json metric_report_json(const MetricReport& m) {
    return nlohmann::json{{"precision", m.precision},
                          {"recall", m.recall},
                          {"f1", m.f1},
                          {"auc", m.auc},
                          {"cross_entropy", m.cross_entropy},
                          {"accuracy", m.accuracy},
                          {"precision_defined", m.precision_defined},
                          {"recall_defined", m.recall_defined},
                          {"f1_defined", m.f1_defined},
                          {"auc_defined", m.auc_defined},
                          {"n_validation", m.n_validation}};
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
    MetricReport m;
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    m.auc = j.at("auc").get<double>();
    m.cross_entropy = j.at("cross_entropy").get<double>();
    m.accuracy = j.at("accuracy").get<double>();
    m.precision_defined = j.at("precision_defined").get<bool>();
    m.recall_defined = j.at("recall_defined").get<bool>();
    m.f1_defined = j.at("f1_defined").get<bool>();
    m.auc_defined = j.at("auc_defined").get<bool>();
    m.n_validation = j.at("n_validation").get<std::size_t>();
    return m;
}

nlohmann::json utility_report_json(const UtilityReport& u) {
    return nlohmann::json{{"scenario", scenario_name(u.scenario)},
                          {"loss_difference", u.loss_difference},
                          {"precision_difference", u.precision_difference},
                          {"recall_difference", u.recall_difference},
                          {"f1_difference", u.f1_difference},
                          {"auc_difference", u.auc_difference},
                          {"accuracy_difference", u.accuracy_difference},
                          {"baseline", metric_report_json(u.baseline)}};
}

UtilityReport utility_report_from_json(const nlohmann::json& j) {
    UtilityReport u;
    u.scenario = j.at("scenario").get<std::string>() == "appendant" ? Scenario::Appendant
                                                                    : Scenario::Replacement;
    u.loss_difference = j.at("loss_difference").get<double>();
    u.precision_difference = j.at("precision_difference").get<double>();
    u.recall_difference = j.at("recall_difference").get<double>();
    u.f1_difference = j.at("f1_difference").get<double>();
    u.auc_difference = j.at("auc_difference").get<double>();
    u.accuracy_difference = j.at("accuracy_difference").get<double>();
    u.baseline = metric_report_from_json(j.at("baseline"));
    return u;
}

nlohmann::json arm_json(const ScenarioArm& arm) {
    nlohmann::json j;
    if (arm.report) j["metrics"] = metric_report_json(*arm.report);
    if (arm.utility) j["utility"] = utility_report_json(*arm.utility);
    if (!arm.error.empty()) j["error"] = arm.error;
    return j;
}

ScenarioArm arm_from_json(const nlohmann::json& j) {
    ScenarioArm arm;
    if (j.contains("metrics")) arm.report = metric_report_from_json(j.at("metrics"));
    if (j.contains("utility")) arm.utility = utility_report_from_json(j.at("utility"));
    if (j.contains("error")) arm.error = j.at("error").get<std::string>();
    return arm;
}

}  // namespace

std::string scenario_report_json(const ScenarioReport& report) {
    nlohmann::json outcomes = nlohmann::json::array();
    for (const ScenarioOutcome& outcome : report.outcomes) {
        outcomes.push_back(nlohmann::json{{"classifier", classifier_kind_name(outcome.kind)},
                                          {"baseline", arm_json(outcome.baseline)},
                                          {"replacement", arm_json(outcome.replacement)},
                                          {"appendant", arm_json(outcome.appendant)}});
    }
    const nlohmann::json j{{"n_validation", report.n_validation},
                           {"positive_label", report.positive_label},
                           {"threshold", report.threshold},
                           {"outcomes", outcomes}};
    return j.dump(2) + "\n";
}

ScenarioReport scenario_report_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ScenarioReport report;
    report.n_validation = j.at("n_validation").get<std::size_t>();
    report.positive_label = j.at("positive_label").get<std::string>();
    report.threshold = j.at("threshold").get<double>();
    for (const nlohmann::json& oj : j.at("outcomes")) {
        ScenarioOutcome outcome;
        const std::optional<ClassifierKind> kind =
            classifier_kind_from_name(oj.at("classifier").get<std::string>());
        if (!kind) {
            throw ValidationError("unknown classifier kind in scenario report");
        }
        outcome.kind = *kind;
        outcome.baseline = arm_from_json(oj.at("baseline"));
        outcome.replacement = arm_from_json(oj.at("replacement"));
        outcome.appendant = arm_from_json(oj.at("appendant"));
        report.outcomes.push_back(std::move(outcome));
    }
    return report;
}

std::string scenario_report_csv(const ScenarioReport& report, std::string_view dataset_name) {
    std::ostringstream out;
    out << "dataset,scenario,classifier,metric,baseline,target,difference\n";
    for (const ScenarioOutcome& outcome : report.outcomes) {
        if (!outcome.baseline.report) continue;
        const MetricReport& base = *outcome.baseline.report;
        const auto emit = [&](const char* scenario, const MetricReport& target) {
            const std::pair<const char*, std::pair<double, double>> fields[] = {
                {"precision", {base.precision, target.precision}},
                {"recall", {base.recall, target.recall}},
                {"f1", {base.f1, target.f1}},
                {"auc", {base.auc, target.auc}},
                {"cross_entropy", {base.cross_entropy, target.cross_entropy}},
                {"accuracy", {base.accuracy, target.accuracy}},
            };
            for (const auto& [metric, values] : fields) {
                out << dataset_name << ',' << scenario << ','
                    << classifier_kind_name(outcome.kind) << ',' << metric << ','
                    << format_number(values.first) << ',' << format_number(values.second) << ','
                    << format_number(values.second - values.first) << '\n';
            }
        };
        if (outcome.replacement.report) emit("replacement", *outcome.replacement.report);
        if (outcome.appendant.report) emit("appendant", *outcome.appendant.report);
    }
    return out.str();
}

}  // namespace prro
