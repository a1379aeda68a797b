#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "prro/csv.hpp"
#include "prro/generator.hpp"
#include "prro/reordering.hpp"
#include "testutil.hpp"

using namespace prro;
namespace fs = std::filesystem;

namespace {

Dataset label_only_dataset(std::size_t a_count, std::size_t b_count) {
    const Schema schema({testutil::label_col("y", {"A", "B"})});
    std::vector<Row> rows;
    for (std::size_t i = 0; i < a_count; ++i) rows.push_back({Cell::category(0)});
    for (std::size_t i = 0; i < b_count; ++i) rows.push_back({Cell::category(1)});
    return Dataset(schema, std::move(rows));
}

// y = indicator(x_p > median) with three noise features ahead of x_p. The
// noise columns matter: in a first-order chain any two adjacent columns
// capture their full joint, so a lone feature would show no order effect;
// predictor-first only breaks the rule once noise sits between y and x_p.
Dataset rule_fixture(std::size_t n, std::uint64_t seed) {
    testutil::Rng rng(seed);
    std::vector<double> xs;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(rng.next_unit());
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[n / 2];
    std::vector<Row> rows;
    for (double x : xs) {
        rows.push_back({Cell::number(rng.next_unit()), Cell::number(rng.next_unit()),
                        Cell::number(rng.next_unit()), Cell::number(x),
                        Cell::category(x > median ? 1 : 0)});
    }
    const Schema schema({testutil::numeric_col("n1"), testutil::numeric_col("n2"),
                         testutil::numeric_col("n3"), testutil::numeric_col("xp"),
                         testutil::label_col("y", {"neg", "pos"})});
    return Dataset(schema, std::move(rows));
}

double rule_agreement(const Dataset& synthetic, double median) {
    const std::size_t xp = *synthetic.schema().index_of("xp");
    const std::size_t y = synthetic.schema().label_index();
    std::size_t agree = 0;
    for (const Row& row : synthetic.rows()) {
        const bool rule = row[xp].number() > median;
        const bool label = row[y].category() == 1;
        if (rule == label) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(synthetic.row_count());
}

}  // namespace

TEST_CASE("fit_chain: hand-computed Laplace marginal") {
    const Dataset dataset = label_only_dataset(3, 1);
    const ChainModel model = fit_chain(dataset, ChainConfig{});
    REQUIRE(model.marginal().size() == 2);
    CHECK(model.marginal()[0] == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
    CHECK(model.marginal()[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("fit_chain: constant numeric column degenerates to one state") {
    const Schema schema({testutil::numeric_col("x"), testutil::label_col("y", {"a", "b"})});
    std::vector<Row> rows;
    for (int i = 0; i < 10; ++i) {
        rows.push_back({Cell::number(7.25), Cell::category(i % 2)});
    }
    const Dataset dataset(schema, std::move(rows));
    const ChainModel model = fit_chain(dataset, ChainConfig{});
    CHECK(model.states(0).state_count() == 1);
    CHECK(model.states(0).edges.size() == 1);
    CHECK(model.states(0).edges[0] == 7.25);

    // sampling a constant column reproduces the constant exactly
    const Dataset synthetic = sample(model, 50, 3);
    for (const Row& row : synthetic.rows()) {
        CHECK(row[0].number() == 7.25);
    }
}

TEST_CASE("fit_chain: conditional tables are smoothed probability vectors") {
    testutil::Rng rng(12);
    const Schema schema = testutil::fuzz_schema(rng, 4, false);
    const Dataset dataset = testutil::fuzz_dataset(rng, schema, 200);
    const ChainConfig config;
    const ChainModel model = fit_chain(dataset, config);

    double marginal_sum = 0.0;
    for (double p : model.marginal()) {
        CHECK(p > 0.0);
        marginal_sum += p;
    }
    CHECK(marginal_sum == doctest::Approx(1.0).epsilon(1e-9));

    for (std::size_t c = 1; c < schema.size(); ++c) {
        const std::size_t prev = model.states(c - 1).state_count();
        const std::size_t curr = model.states(c).state_count();
        const std::vector<double>& table = model.conditional(c);
        const double floor =
            config.alpha / (static_cast<double>(dataset.row_count()) +
                            config.alpha * static_cast<double>(curr));
        for (std::size_t p = 0; p < prev; ++p) {
            double row_sum = 0.0;
            for (std::size_t s = 0; s < curr; ++s) {
                const double v = table[p * curr + s];
                CHECK(v >= floor - 1e-15);
                row_sum += v;
            }
            CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("fit_chain: independent columns give near-marginal conditionals") {
    testutil::Rng rng(13);
    const Schema schema({testutil::numeric_col("u"), testutil::numeric_col("v"),
                         testutil::label_col("y", {"only"})});
    std::vector<Row> rows;
    for (int i = 0; i < 10000; ++i) {
        rows.push_back({Cell::number(rng.next_unit()), Cell::number(rng.next_unit()),
                        Cell::category(0)});
    }
    const Dataset dataset(schema, std::move(rows));
    const ChainModel model = fit_chain(dataset, ChainConfig{});

    // P(v | u-state) should be close to uniform (v's marginal) for every
    // u-state because the columns are independent
    const std::size_t curr = model.states(1).state_count();
    const std::vector<double>& table = model.conditional(1);
    for (std::size_t p = 0; p < model.states(0).state_count(); ++p) {
        double l1 = 0.0;
        for (std::size_t s = 0; s < curr; ++s) {
            l1 += std::abs(table[p * curr + s] - 1.0 / static_cast<double>(curr));
        }
        CHECK(l1 < 0.1);
    }
}

TEST_CASE("fit_chain validates input") {
    const Schema schema({testutil::label_col("y", {"a"})});
    CHECK_THROWS_AS(fit_chain(Dataset(schema, {}), ChainConfig{}), ValidationError);
    ChainConfig bad;
    bad.bins = 1;
    CHECK_THROWS_AS(fit_chain(label_only_dataset(2, 2), bad), ValidationError);
    ChainConfig negative_alpha;
    negative_alpha.alpha = 0.0;
    CHECK_THROWS_AS(fit_chain(label_only_dataset(2, 2), negative_alpha), ValidationError);
}

TEST_CASE("sample: determinism and schema fidelity") {
    const Dataset fitted = testutil::patterned_dataset(400, 3, 0.3, 14);
    const ChainModel model = fit_chain(fitted, ChainConfig{});
    const Dataset a = sample(model, 500, 21);
    const Dataset b = sample(model, 500, 21);
    CHECK(a == b);
    const Dataset c = sample(model, 500, 22);
    CHECK(a != c);
    CHECK(a.schema() == fitted.schema());
    CHECK_THROWS_AS(sample(model, 0, 1), ValidationError);
}

TEST_CASE("sample: constant table reproduces its row") {
    const Schema schema({testutil::numeric_col("x"),
                         testutil::categorical_col("c", {"only", "other"}),
                         testutil::label_col("y", {"a", "b"})});
    std::vector<Row> rows(20, Row{Cell::number(3.5), Cell::category(0), Cell::category(1)});
    const Dataset dataset(schema, rows);
    const ChainModel model = fit_chain(dataset, ChainConfig{});
    const Dataset synthetic = sample(model, 40, 5);
    for (const Row& row : synthetic.rows()) {
        CHECK(row[0].number() == 3.5);
        CHECK(row[1].category() == 0);  // unobserved categories are never sampled
        CHECK(row[2].category() == 1);
    }
}

TEST_CASE("order sensitivity: predictor-last beats predictor-first on the rule") {
    std::size_t wins = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset data = rule_fixture(5000, 100 + seed);
        std::vector<double> xs;
        for (const Row& row : data.rows()) xs.push_back(row[0].number());
        std::sort(xs.begin(), xs.end());
        const double median = xs[xs.size() / 2];

        const auto [last, perm_last] = reorder_predictor_last(data);
        const auto [first, perm_first] = reorder_predictor_first(data);

        const Dataset synth_last = inverse_reorder(
            sample(fit_chain(last, ChainConfig{}), 5000, seed), perm_last);
        const Dataset synth_first = inverse_reorder(
            sample(fit_chain(first, ChainConfig{}), 5000, seed), perm_first);

        const double agree_last = rule_agreement(synth_last, median);
        const double agree_first = rule_agreement(synth_first, median);
        CHECK(agree_last >= 0.8);
        CHECK(agree_first < 0.7);  // y decoupled from x_p by the noise chain
        if (agree_last > agree_first) ++wins;
    }
    CHECK(wins == 10);
}

TEST_CASE("order sensitivity witness: implied joints differ") {
    // strongly dependent two-category columns
    const Schema schema({testutil::categorical_col("a", {"0", "1"}),
                         testutil::label_col("b", {"0", "1"})});
    std::vector<Row> rows;
    for (int i = 0; i < 40; ++i) rows.push_back({Cell::category(0), Cell::category(0)});
    for (int i = 0; i < 5; ++i) rows.push_back({Cell::category(0), Cell::category(1)});
    for (int i = 0; i < 3; ++i) rows.push_back({Cell::category(1), Cell::category(0)});
    for (int i = 0; i < 30; ++i) rows.push_back({Cell::category(1), Cell::category(1)});
    const Dataset forward(schema, rows);

    // the same data with columns swapped
    const Schema swapped({testutil::categorical_col("b", {"0", "1"}),
                          testutil::label_col("a", {"0", "1"})});
    std::vector<Row> swapped_rows;
    for (const Row& row : rows) swapped_rows.push_back({row[1], row[0]});
    const Dataset backward(swapped, swapped_rows);

    const ChainModel ab = fit_chain(forward, ChainConfig{});
    const ChainModel ba = fit_chain(backward, ChainConfig{});

    // implied joint over (a, b) state pairs
    double l1 = 0.0;
    for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t b = 0; b < 2; ++b) {
            const double p_ab = ab.marginal()[a] * ab.conditional(1)[a * 2 + b];
            const double p_ba = ba.marginal()[b] * ba.conditional(1)[b * 2 + a];
            l1 += std::abs(p_ab - p_ba);
        }
    }
    CHECK(l1 > 1e-4);
}

TEST_CASE("sharpened sampling shrinks the minority state") {
    const Dataset dataset = label_only_dataset(900, 100);
    ChainConfig plain;
    plain.alpha = 1e-9;
    const Dataset fair = sample(fit_chain(dataset, plain), 20000, 31);

    ChainConfig hot = plain;
    hot.sharpen = 2.0;
    const Dataset skewed = sample(fit_chain(dataset, hot), 20000, 31);

    const double fair_rate = positive_rate(fair, "B").value;
    const double hot_rate = positive_rate(skewed, "B").value;
    CHECK(fair_rate == doctest::Approx(0.1).epsilon(0.15));
    // gamma=2 on (0.9, 0.1): 0.01/0.82 ~ 0.0122
    CHECK(hot_rate == doctest::Approx(0.0122).epsilon(0.3));
    CHECK(hot_rate < 0.5 * fair_rate);
}

TEST_CASE("gower distance: symmetry, range, identity") {
    testutil::Rng rng(15);
    const Schema schema = testutil::fuzz_schema(rng, 5, false);
    const Dataset data = testutil::fuzz_dataset(rng, schema, 60, 0.05);
    const GowerContext ctx = GowerContext::from({&data});
    for (int round = 0; round < 200; ++round) {
        const Row& a = data.row(rng.next_index(data.row_count()));
        const Row& b = data.row(rng.next_index(data.row_count()));
        const double ab = gower_distance(a, b, schema, ctx);
        const double ba = gower_distance(b, a, schema, ctx);
        CHECK(ab == ba);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        if (a == b) CHECK(ab == 0.0);
    }
    // zero iff identical (given nonzero ranges and no missing cells)
    const Row& r = data.row(0);
    CHECK(gower_distance(r, r, schema, ctx) == 0.0);
}

TEST_CASE("leakage_check: forced leakage, tie convention") {
    const Dataset train = testutil::patterned_dataset(150, 3, 0.3, 16);
    const Dataset holdout = testutil::patterned_dataset(150, 3, 0.3, 17);

    // synthetic = exact copy of train with a disjoint holdout
    const LeakageReport leaked = leakage_check(train, train, holdout);
    CHECK(leaked.frac_closer_to_train == 1.0);
    CHECK(leaked.median_dcr_train == 0.0);
    CHECK(leaked.flag);

    // train == holdout: every distance ties, giving exactly 0.5
    const LeakageReport tied = leakage_check(train, train, train);
    CHECK(tied.frac_closer_to_train == 0.5);
    CHECK_FALSE(tied.flag);

    const Schema other({testutil::numeric_col("zz"), testutil::label_col("y", {"n", "p"})});
    CHECK_THROWS_AS(leakage_check(Dataset(other, {}), train, holdout), ValidationError);
    CHECK_THROWS_AS(leakage_check(train, Dataset(train.schema(), {}), holdout),
                    ValidationError);

    const std::string json = leakage_report_json(leaked);
    CHECK(json.find("\"frac_closer_to_train\": 1.0") != std::string::npos);
    CHECK(json.find("\"flag\": true") != std::string::npos);
}

TEST_CASE("leakage_check: independent noise sits near one half") {
    testutil::Rng rng(18);
    const Schema schema({testutil::numeric_col("u"), testutil::numeric_col("v"),
                         testutil::label_col("y", {"only"})});
    auto noise = [&](std::size_t n) {
        std::vector<Row> rows;
        for (std::size_t i = 0; i < n; ++i) {
            rows.push_back({Cell::number(rng.next_unit()), Cell::number(rng.next_unit()),
                            Cell::category(0)});
        }
        return Dataset(schema, std::move(rows));
    };
    const Dataset train = noise(600);
    const Dataset holdout = noise(600);
    const Dataset synthetic = noise(800);
    const LeakageReport report = leakage_check(synthetic, train, holdout);
    CHECK(report.frac_closer_to_train > 0.38);
    CHECK(report.frac_closer_to_train < 0.62);
    CHECK_FALSE(report.flag);
}

TEST_CASE("bridge: export/import round trip and permuted lines") {
    const fs::path dir = fs::temp_directory_path() / "prro_bridge_test";
    fs::remove_all(dir);
    testutil::Rng rng(19);
    const Schema schema = testutil::fuzz_schema(rng, 4, false);
    const Dataset dataset = testutil::fuzz_dataset(rng, schema, 30);

    bridge_export(dataset, dir);
    CHECK(fs::exists(dir / "corpus.txt"));
    CHECK(fs::exists(dir / "schema.txt"));

    // a missing generated.txt names the path
    try {
        bridge_import(dir, schema, ParsePolicy{});
        FAIL("expected an import error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("generated.txt") != std::string::npos);
    }

    // an external tool that echoes the corpus reproduces the dataset
    fs::copy_file(dir / "corpus.txt", dir / "generated.txt");
    CHECK(bridge_import(dir, schema, ParsePolicy{}) == dataset);

    // permuting segments within lines changes nothing (name-matched parse)
    const std::vector<std::string> lines = load_corpus_lines(dir / "generated.txt");
    std::ofstream out(dir / "generated.txt", std::ios::binary);
    for (const std::string& line : lines) {
        if (line.rfind("#schema:", 0) == 0) {
            out << line << '\n';
            continue;
        }
        // rotate the segments: move the first segment to the back
        const std::size_t cut = line.find(", ");
        if (cut == std::string::npos) {
            out << line << '\n';
        } else {
            out << line.substr(cut + 2) << ", " << line.substr(0, cut) << '\n';
        }
    }
    out.close();
    CHECK(bridge_import(dir, schema, ParsePolicy{}) == dataset);
}

TEST_CASE("bridge: external command contract") {
    const fs::path dir = fs::temp_directory_path() / "prro_bridge_cmd_test";
    fs::remove_all(dir);
    const Dataset dataset = testutil::patterned_dataset(20, 2, 0.5, 20);
    bridge_export(dataset, dir);

    // a helper script that copies corpus.txt to generated.txt
    const fs::path script = fs::temp_directory_path() / "prro_bridge_echo.sh";
    {
        std::ofstream s(script);
        s << "#!/bin/sh\ncp \"$1/corpus.txt\" \"$1/generated.txt\"\n";
    }
    fs::permissions(script, fs::perms::owner_all);
    run_bridge_command("/bin/sh " + script.string(), dir);
    CHECK(bridge_import(dir, dataset.schema(), ParsePolicy{}) == dataset);

    CHECK_THROWS_AS(run_bridge_command("/bin/false", dir), IoError);
}
