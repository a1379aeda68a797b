#include <doctest.h>

#include <cmath>

#include "prro/evaluation.hpp"
#include "testutil.hpp"

using namespace prro;

namespace {

// Exhaustive Mann-Whitney pair enumeration, the oracle the rank-based AUC
// must agree with exactly.
double oracle_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

Dataset separable_fixture(std::size_t n, std::uint64_t seed) {
    testutil::Rng rng(seed);
    std::vector<Row> rows;
    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = i % 2 == 0;
        const double x1 = (positive ? 1.0 : -1.0) * (0.5 + rng.next_unit());
        rows.push_back({Cell::number(x1), Cell::number(rng.next_unit()),
                        Cell::category(positive ? 1 : 0)});
    }
    const Schema schema({testutil::numeric_col("x1"), testutil::numeric_col("x2"),
                         testutil::label_col("y", {"neg", "pos"})});
    return Dataset(schema, std::move(rows));
}

}  // namespace

TEST_CASE("decision tree separates a linearly separable fixture") {
    const Dataset train = separable_fixture(80, 1);
    TrainConfig config;
    config.positive_label = "pos";
    const Classifier tree = train_classifier(ClassifierKind::DecisionTree, train, config);
    const MetricReport report = metrics(tree, train, "pos");
    CHECK(report.accuracy == 1.0);
    CHECK(report.f1 == 1.0);

    // logistic regression gets there too on this margin
    const Classifier lr = train_classifier(ClassifierKind::LogisticRegression, train, config);
    CHECK(metrics(lr, train, "pos").accuracy == 1.0);
}

TEST_CASE("null features give chance-level validation accuracy") {
    testutil::Rng rng(2);
    auto noise_dataset = [&](std::size_t n) {
        std::vector<Row> rows;
        for (std::size_t i = 0; i < n; ++i) {
            rows.push_back({Cell::number(rng.next_unit()), Cell::number(rng.next_unit()),
                            Cell::category(rng.next_unit() < 0.5 ? 1 : 0)});
        }
        const Schema schema({testutil::numeric_col("x1"), testutil::numeric_col("x2"),
                             testutil::label_col("y", {"neg", "pos"})});
        return Dataset(schema, std::move(rows));
    };
    const Dataset train = noise_dataset(2000);
    const Dataset validation = noise_dataset(2000);
    TrainConfig config;
    config.positive_label = "pos";
    const Classifier lr = train_classifier(ClassifierKind::LogisticRegression, train, config);
    const MetricReport report = metrics(lr, validation, "pos");
    CHECK(report.accuracy > 0.45);
    CHECK(report.accuracy < 0.55);
}

TEST_CASE("logistic gradient matches central finite differences") {
    testutil::Rng rng(3);
    for (int round = 0; round < 20; ++round) {
        const std::size_t n = 20 + rng.next_index(30);
        const std::size_t d = 2 + rng.next_index(4);
        Matrix x;
        x.rows = n;
        x.cols = d + 1;
        x.data.resize(n * (d + 1));
        std::vector<double> y(n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < d; ++c) x.at(r, c) = rng.next_unit() * 4.0 - 2.0;
            x.at(r, d) = 1.0;
            y[r] = rng.next_unit() < 0.5 ? 0.0 : 1.0;
        }
        // at the origin on the first round, then at random points
        std::vector<double> w(d + 1, 0.0);
        if (round > 0) {
            for (double& v : w) v = rng.next_unit() * 2.0 - 1.0;
        }

        const std::vector<double> grad = LogisticCore::gradient(x, y, w);
        const double h = 1e-6;
        for (std::size_t c = 0; c < w.size(); ++c) {
            std::vector<double> hi = w, lo = w;
            hi[c] += h;
            lo[c] -= h;
            const double fd =
                (LogisticCore::loss(x, y, hi) - LogisticCore::loss(x, y, lo)) / (2.0 * h);
            const double scale = std::max({std::abs(fd), std::abs(grad[c]), 1e-8});
            CHECK(std::abs(grad[c] - fd) / scale < 1e-5);
        }
    }
}

TEST_CASE("metric examples from the pair statistic") {
    {
        const std::vector<double> scores{0.9, 0.8, 0.3};
        const std::vector<int> labels{1, 0, 1};
        const MetricReport report = metrics_from_scores(scores, labels, 0.5);
        CHECK(report.auc == doctest::Approx(0.5).epsilon(1e-12));
    }
    {
        const std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
        const std::vector<int> labels{1, 1, 0, 0};
        CHECK(metrics_from_scores(scores, labels, 0.5).auc == 1.0);
        const std::vector<int> inverted{0, 0, 1, 1};
        CHECK(metrics_from_scores(scores, inverted, 0.5).auc == 0.0);
    }
    {
        // P = R = 0.5 -> F1 = 0.5: one TP, one FP, one FN, one TN
        const std::vector<double> scores{0.9, 0.9, 0.1, 0.1};
        const std::vector<int> labels{1, 0, 1, 0};
        const MetricReport report = metrics_from_scores(scores, labels, 0.5);
        CHECK(report.precision == 0.5);
        CHECK(report.recall == 0.5);
        CHECK(report.f1 == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(report.accuracy == 0.5);
    }
    {
        // undefined flags
        const std::vector<double> scores{0.1, 0.2};
        const std::vector<int> all_negative{0, 0};
        const MetricReport report = metrics_from_scores(scores, all_negative, 0.5);
        CHECK_FALSE(report.precision_defined);  // nothing predicted positive
        CHECK_FALSE(report.recall_defined);     // no actual positives
        CHECK_FALSE(report.auc_defined);
        CHECK(report.precision == 0.0);
        CHECK(report.recall == 0.0);
    }
}

TEST_CASE("AUC agrees with pair enumeration and survives monotone maps") {
    testutil::Rng rng(4);
    for (int round = 0; round < 80; ++round) {
        const std::size_t n = 2 + rng.next_index(120);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.next_unit() < 0.3 ? std::floor(rng.next_unit() * 5.0) / 5.0
                                              : rng.next_unit();
            labels[i] = rng.next_unit() < 0.4 ? 1 : 0;
            (labels[i] ? has_pos : has_neg) = true;
        }
        if (!has_pos) labels[0] = 1;
        if (!has_neg || n < 2) continue;
        if (labels[0] == 1 && n >= 2) labels[1] = 0;

        const double expected = oracle_auc(scores, labels);
        const double actual = auc_from_scores(scores, labels);
        CHECK(actual == doctest::Approx(expected).epsilon(1e-12));

        // strictly monotone transform leaves AUC unchanged
        std::vector<double> warped(n);
        const double a = 0.5 + rng.next_unit() * 3.0;
        const double b = rng.next_unit() * 10.0 - 5.0;
        for (std::size_t i = 0; i < n; ++i) {
            warped[i] = a * std::exp(scores[i]) + b;  // strictly increasing
        }
        CHECK(auc_from_scores(warped, labels) == doctest::Approx(actual).epsilon(1e-12));
    }
}

TEST_CASE("cross-entropy is clipped and nonnegative") {
    const std::vector<double> scores{0.0, 1.0};
    const std::vector<int> labels{0, 1};
    const MetricReport perfect = metrics_from_scores(scores, labels, 0.5);
    CHECK(perfect.cross_entropy >= 0.0);
    CHECK(perfect.cross_entropy < 1e-10);  // clipped at 1e-12, not infinite

    const std::vector<int> wrong{1, 0};
    const MetricReport terrible = metrics_from_scores(scores, wrong, 0.5);
    CHECK(terrible.cross_entropy > 20.0);
    CHECK(std::isfinite(terrible.cross_entropy));
}

TEST_CASE("utility: zero, arithmetic, antisymmetry") {
    testutil::Rng rng(5);
    MetricReport m;
    m.precision = 0.7;
    m.recall = 0.6;
    m.f1 = 0.646;
    m.auc = 0.8;
    m.cross_entropy = 0.4;
    m.accuracy = 0.75;
    m.n_validation = 100;

    const UtilityReport self = utility(m, m, Scenario::Replacement);
    CHECK(self.loss_difference == 0.0);
    CHECK(self.f1_difference == 0.0);
    CHECK(self.auc_difference == 0.0);

    MetricReport baseline = m;
    baseline.cross_entropy = 0.7;
    MetricReport target = m;
    target.cross_entropy = 0.5;
    CHECK(utility(target, baseline, Scenario::Appendant).loss_difference ==
          doctest::Approx(-0.2).epsilon(1e-12));

    for (int round = 0; round < 50; ++round) {
        auto random_report = [&] {
            MetricReport r;
            r.precision = rng.next_unit();
            r.recall = rng.next_unit();
            r.f1 = rng.next_unit();
            r.auc = rng.next_unit();
            r.cross_entropy = rng.next_unit() * 3.0;
            r.accuracy = rng.next_unit();
            r.n_validation = 50;
            return r;
        };
        const MetricReport a = random_report();
        const MetricReport b = random_report();
        const UtilityReport ab = utility(a, b, Scenario::Replacement);
        const UtilityReport ba = utility(b, a, Scenario::Replacement);
        CHECK(ab.loss_difference == doctest::Approx(-ba.loss_difference).epsilon(1e-12));
        CHECK(ab.precision_difference ==
              doctest::Approx(-ba.precision_difference).epsilon(1e-12));
        CHECK(ab.recall_difference == doctest::Approx(-ba.recall_difference).epsilon(1e-12));
        CHECK(ab.f1_difference == doctest::Approx(-ba.f1_difference).epsilon(1e-12));
        CHECK(ab.auc_difference == doctest::Approx(-ba.auc_difference).epsilon(1e-12));
        CHECK(ab.accuracy_difference ==
              doctest::Approx(-ba.accuracy_difference).epsilon(1e-12));
    }

    MetricReport mismatched = m;
    mismatched.n_validation = 99;
    CHECK_THROWS_AS(utility(m, mismatched, Scenario::Replacement), ValidationError);
}

TEST_CASE("evaluate_scenarios: copies and the empty synthetic") {
    const Dataset source = testutil::patterned_dataset(300, 3, 0.4, 6);
    SplitOptions options;
    options.seed = 6;
    const SplitBundle bundle = split(source, options);
    const Dataset original = concat(bundle.generator_train, bundle.holdout);

    const std::vector<ClassifierKind> kinds{ClassifierKind::LogisticRegression,
                                            ClassifierKind::DecisionTree,
                                            ClassifierKind::GaussianNb};

    // synthetic = exact copy of the original training data: replacement
    // utilities are identically zero for these deterministic learners
    const ScenarioReport copy_report = evaluate_scenarios(bundle, original, kinds, "pos");
    for (const ScenarioOutcome& outcome : copy_report.outcomes) {
        REQUIRE(outcome.replacement.utility.has_value());
        CHECK(outcome.replacement.utility->loss_difference == 0.0);
        CHECK(outcome.replacement.utility->f1_difference == 0.0);
        CHECK(outcome.replacement.utility->auc_difference == 0.0);
    }

    // synthetic = empty: appendant equals baseline exactly; replacement
    // records an error instead of aborting
    const Dataset empty(source.schema(), {});
    const ScenarioReport empty_report = evaluate_scenarios(bundle, empty, kinds, "pos");
    for (const ScenarioOutcome& outcome : empty_report.outcomes) {
        REQUIRE(outcome.baseline.report.has_value());
        REQUIRE(outcome.appendant.report.has_value());
        CHECK(outcome.appendant.report->accuracy == outcome.baseline.report->accuracy);
        CHECK(outcome.appendant.report->cross_entropy ==
              outcome.baseline.report->cross_entropy);
        CHECK(outcome.appendant.utility->loss_difference == 0.0);
        CHECK_FALSE(outcome.replacement.report.has_value());
        CHECK(outcome.replacement.error.find("replacement") != std::string::npos);
    }

    // schema mismatch is rejected up front
    const Schema other({testutil::numeric_col("zz"), testutil::label_col("y", {"n", "p"})});
    CHECK_THROWS_AS(evaluate_scenarios(bundle, Dataset(other, {}), kinds, "pos"),
                    ValidationError);
}

TEST_CASE("single-class training points at the degenerate fix") {
    std::vector<Row> rows;
    for (int i = 0; i < 30; ++i) {
        rows.push_back({Cell::number(i), Cell::category(0)});
    }
    const Schema schema({testutil::numeric_col("x"), testutil::label_col("y", {"neg", "pos"})});
    const Dataset all_negative(schema, std::move(rows));
    TrainConfig config;
    config.positive_label = "pos";
    try {
        train_classifier(ClassifierKind::LogisticRegression, all_negative, config);
        FAIL("expected a single-class error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("degenerate_positive_fix") != std::string::npos);
    }
}

TEST_CASE("degenerate_positive_fix") {
    std::vector<Row> rows;
    for (int i = 0; i < 100; ++i) {
        rows.push_back({Cell::number(i), Cell::category(0)});
    }
    const Schema schema({testutil::numeric_col("x"), testutil::label_col("y", {"neg", "pos"})});
    const Dataset all_negative(schema, std::move(rows));

    const Dataset fixed = degenerate_positive_fix(all_negative, "pos", 9);
    std::size_t positives = 0;
    for (const Row& row : fixed.rows()) positives += row[1].category() == 1 ? 1 : 0;
    CHECK(positives == 1);

    // deterministic: the same row flips for the same seed
    CHECK(degenerate_positive_fix(all_negative, "pos", 9) == fixed);
    CHECK(degenerate_positive_fix(all_negative, "pos", 10) != fixed);

    // a dataset that already has a positive is untouched
    CHECK(degenerate_positive_fix(fixed, "pos", 123) == fixed);

    CHECK_THROWS_AS(degenerate_positive_fix(Dataset(schema, {}), "pos", 1), ValidationError);
}

TEST_CASE("discount_rate reproduces the anchored arithmetic") {
    CHECK(discount_rate(0.019521, 0.009515) * 100.0 == doctest::Approx(51.26).epsilon(2e-4));
    CHECK(discount_rate(0.112912, 0.103754) * 100.0 == doctest::Approx(8.11).epsilon(2e-3));
    CHECK(discount_rate(0.3, 0.3) == 0.0);
    CHECK(discount_rate(0.02, 0.04) < 0.0);  // overshoot goes negative
    CHECK_THROWS_AS(discount_rate(0.0, 0.1), ValidationError);

    // identity: discount(r, r*(1-d)) == d
    testutil::Rng rng(10);
    for (int round = 0; round < 100; ++round) {
        const double r = 0.01 + rng.next_unit() * 0.8;
        const double d = rng.next_unit() * 2.0 - 0.5;
        CHECK(discount_rate(r, r * (1.0 - d)) == doctest::Approx(d).epsilon(1e-12));
    }
}

TEST_CASE("scenario report serializes to JSON and CSV") {
    const Dataset source = testutil::patterned_dataset(200, 3, 0.4, 11);
    SplitOptions options;
    options.seed = 11;
    const SplitBundle bundle = split(source, options);
    const Dataset synthetic = concat(bundle.generator_train, bundle.holdout);
    const ScenarioReport report = evaluate_scenarios(
        bundle, synthetic, {ClassifierKind::LogisticRegression}, "pos");

    const std::string json = scenario_report_json(report);
    const ScenarioReport parsed = scenario_report_from_json(json);
    CHECK(parsed.outcomes.size() == report.outcomes.size());
    CHECK(parsed.n_validation == report.n_validation);
    CHECK(scenario_report_json(parsed) == json);

    const std::string csv = scenario_report_csv(report, "demo");
    CHECK(csv.find("dataset,scenario,classifier,metric,baseline,target,difference") == 0);
    CHECK(csv.find("demo,replacement,logistic_regression,f1,") != std::string::npos);
    CHECK(csv.find("demo,appendant,logistic_regression,auc,") != std::string::npos);
}
