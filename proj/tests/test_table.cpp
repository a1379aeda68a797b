#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "prro/csv.hpp"
#include "prro/table.hpp"
#include "testutil.hpp"

using namespace prro;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    const fs::path dir =
        fs::temp_directory_path() / ("prro_table_test_" + std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

Dataset three_row_fixture() {
    std::vector<ColumnSchema> columns{
        testutil::numeric_col("age"),
        testutil::categorical_col("sex", {"M", "F"}),
        testutil::label_col("click", {"no", "yes"}),
    };
    std::vector<Row> rows{
        {Cell::number(25), Cell::category(0), Cell::category(1)},
        {Cell::number(31), Cell::category(1), Cell::category(0)},
        {Cell::number(47), Cell::category(0), Cell::category(0)},
    };
    return Dataset(Schema(std::move(columns)), std::move(rows));
}

}  // namespace

TEST_CASE("schema invariants") {
    CHECK_THROWS_AS(Schema({testutil::numeric_col("a"), testutil::numeric_col("a")}),
                    ValidationError);  // duplicate names
    CHECK_THROWS_AS(Schema({testutil::numeric_col("a")}), ValidationError);  // no label
    CHECK_THROWS_AS(Schema({testutil::label_col("y", {"a", "a"})}), ValidationError);
    CHECK_THROWS_AS(Schema({testutil::label_col("y", {"a"}), testutil::label_col("z", {"b"})}),
                    ValidationError);  // two labels
    CHECK_THROWS_AS(Schema({testutil::numeric_col(""), testutil::label_col("y", {"a"})}),
                    ValidationError);  // empty name

    const Schema schema({testutil::numeric_col("a"), testutil::label_col("y", {"n", "p"})});
    CHECK(schema.label_index() == 1);
    CHECK(schema.feature_indices() == std::vector<std::size_t>{0});
    CHECK(schema.index_of("a") == 0);
    CHECK_FALSE(schema.index_of("zzz").has_value());
}

TEST_CASE("dataset validates rows against the schema") {
    const Schema schema({testutil::numeric_col("a"), testutil::label_col("y", {"n", "p"})});
    CHECK_THROWS_AS(Dataset(schema, {{Cell::number(1)}}), ValidationError);  // short row
    CHECK_THROWS_AS(Dataset(schema, {{Cell::category(0), Cell::category(0)}}),
                    ValidationError);  // categorical cell in numeric column
    CHECK_THROWS_AS(Dataset(schema, {{Cell::number(1), Cell::category(7)}}),
                    ValidationError);  // category index out of range
    CHECK_THROWS_AS(Cell::number(std::numeric_limits<double>::infinity()), ValidationError);
}

TEST_CASE("csv: schema load and forced numeric failure") {
    const fs::path dir = temp_dir();
    {
        std::ofstream out(dir / "ok.csv");
        out << "age,sex,click\n25,M,yes\n31,F,no\n47,M,no\n";
    }
    const Dataset expected = three_row_fixture();
    const Dataset loaded = load_csv(dir / "ok.csv", expected.schema());
    CHECK(loaded == expected);
    CHECK(loaded.schema()[0].name == "age");  // file order preserved

    {
        std::ofstream out(dir / "bad.csv");
        out << "age,sex,click\n25,M,yes\nabc,F,no\n";
    }
    try {
        load_csv(dir / "bad.csv", expected.schema());
        FAIL("expected a parse error");
    } catch (const ValidationError& e) {
        const std::string message = e.what();
        CHECK(message.find("row 2") != std::string::npos);
        CHECK(message.find("age") != std::string::npos);
    }

    CHECK_THROWS_AS(load_csv(dir / "missing.csv", expected.schema()), IoError);

    {
        std::ofstream out(dir / "nolabel.csv");
        out << "age,sex,click\n25,M,\n";
    }
    CHECK_THROWS_AS(load_csv(dir / "nolabel.csv", expected.schema()), ValidationError);
}

TEST_CASE("csv: save/load round trip over fuzzed tables") {
    const fs::path dir = temp_dir();
    testutil::Rng rng(2024);
    for (int round = 0; round < 100; ++round) {
        const Schema schema = testutil::fuzz_schema(rng, 6, /*spicy_values=*/true);
        const Dataset dataset =
            testutil::fuzz_dataset(rng, schema, 1 + rng.next_index(40), /*missing_rate=*/0.1);
        const fs::path path = dir / ("roundtrip_" + std::to_string(round) + ".csv");
        save_csv(dataset, path);
        const Dataset reloaded = load_csv(path, schema);
        REQUIRE(reloaded == dataset);
    }
}

TEST_CASE("csv: kind inference") {
    const fs::path dir = temp_dir();
    {
        std::ofstream out(dir / "infer.csv");
        out << "a,b,target\n1.5,x,yes\n2,y,no\n,x,yes\n";
    }
    const Dataset dataset = load_csv_infer(dir / "infer.csv");
    CHECK(dataset.schema()[0].kind == ColumnKind::Numeric);
    CHECK(dataset.schema()[1].kind == ColumnKind::Categorical);
    CHECK(dataset.schema().label_index() == 2);  // defaults to the last column
    CHECK(dataset.schema()[1].categories == std::vector<std::string>{"x", "y"});
    CHECK(dataset.cell(2, 0).is_missing());
}

TEST_CASE("schema sidecar round trip") {
    const fs::path dir = temp_dir();
    const Schema schema({
        testutil::numeric_col("age"),
        testutil::categorical_col("sex", {"M|m", "F\\f", "new\nline", "cr\rhere"}),
        testutil::label_col("click", {"no", "yes"}),
    });
    save_schema_sidecar(schema, dir / "schema.txt", "yes");
    const SchemaSidecar sidecar = load_schema_sidecar(dir / "schema.txt");
    CHECK(sidecar.schema == schema);
    CHECK(sidecar.positive_label == "yes");

    // fuzzed schemas with hostile names and categories survive the sidecar
    testutil::Rng rng(2025);
    for (int round = 0; round < 60; ++round) {
        const Schema fuzzed = testutil::fuzz_schema(rng, 6, /*spicy_values=*/true);
        const fs::path path = dir / ("sidecar_" + std::to_string(round) + ".txt");
        save_schema_sidecar(fuzzed, path, fuzzed.label().categories.front());
        const SchemaSidecar loaded = load_schema_sidecar(path);
        REQUIRE(loaded.schema == fuzzed);
        REQUIRE(loaded.positive_label == fuzzed.label().categories.front());
    }
}

TEST_CASE("split: documented ratio sizes and identical-row case") {
    testutil::Rng rng(7);
    const Schema schema = testutil::fuzz_schema(rng, 3, false);
    const Dataset hundred = testutil::fuzz_dataset(rng, schema, 100);

    SplitOptions options;
    options.seed = 7;
    options.stratified = false;
    const SplitBundle bundle = split(hundred, options);
    CHECK(bundle.generator_train.row_count() == 40);
    CHECK(bundle.holdout.row_count() == 40);
    CHECK(bundle.validation.row_count() == 20);

    // 10 identical rows: three disjoint parts of sizes (4,4,2) for any seed.
    const Schema small_schema({testutil::numeric_col("x"), testutil::label_col("y", {"a"})});
    std::vector<Row> identical(10, Row{Cell::number(1.0), Cell::category(0)});
    const Dataset ten(small_schema, identical);
    for (std::uint64_t seed : {0ULL, 5ULL, 99ULL}) {
        SplitOptions opt;
        opt.seed = seed;
        const SplitBundle b = split(ten, opt);
        CHECK(b.generator_train.row_count() == 4);
        CHECK(b.holdout.row_count() == 4);
        CHECK(b.validation.row_count() == 2);
    }
}

TEST_CASE("split: stratified keeps the class balance") {
    const Dataset dataset = testutil::patterned_dataset(1000, 3, 0.0, 3);
    // force exactly 20 positives
    std::vector<Row> rows = dataset.rows();
    for (std::size_t i = 0; i < 20; ++i) rows[i * 50][3] = Cell::category(1);
    const Dataset skewed(dataset.schema(), std::move(rows));

    SplitOptions options;
    options.seed = 11;
    const SplitBundle bundle = split(skewed, options);
    const double parts[3] = {
        positive_rate(bundle.generator_train, "pos").value,
        positive_rate(bundle.holdout, "pos").value,
        positive_rate(bundle.validation, "pos").value,
    };
    for (std::size_t p = 0; p < 3; ++p) {
        const std::size_t n = p == 0   ? bundle.generator_train.row_count()
                              : p == 1 ? bundle.holdout.row_count()
                                       : bundle.validation.row_count();
        // within one count of the global 2%
        CHECK(std::abs(parts[p] - 0.02) * static_cast<double>(n) <= 1.0 + 1e-9);
    }
}

TEST_CASE("split: disjoint, exhaustive, deterministic over fuzz cases") {
    testutil::Rng rng(42);
    const Schema schema({testutil::numeric_col("id"), testutil::numeric_col("x"),
                         testutil::label_col("y", {"neg", "pos"})});
    for (int round = 0; round < 500; ++round) {
        const std::size_t n = 6 + rng.next_index(80);
        // unique id per row so disjointness is checkable by identity
        std::vector<Row> rows;
        for (std::size_t i = 0; i < n; ++i) {
            rows.push_back({Cell::number(static_cast<double>(i)),
                            Cell::number(rng.next_unit()),
                            Cell::category(rng.next_unit() < 0.4 ? 1 : 0)});
        }
        const Dataset dataset(schema, std::move(rows));

        SplitOptions options;
        options.seed = rng.next_u64();
        options.stratified = rng.next_unit() < 0.5;
        const double a = 0.1 + rng.next_unit() * 0.5;
        const double b = 0.1 + rng.next_unit() * (0.9 - a - 0.1);
        options.ratios = {a, b, 1.0 - a - b};

        SplitBundle bundle;
        try {
            bundle = split(dataset, options);
        } catch (const ValidationError&) {
            REQUIRE(options.stratified);  // a class was too small to stratify
            options.stratified = false;
            bundle = split(dataset, options);
        }

        std::set<double> seen;
        for (const Dataset* part :
             {&bundle.generator_train, &bundle.holdout, &bundle.validation}) {
            for (const Row& row : part->rows()) {
                CHECK(seen.insert(row[0].number()).second);  // pairwise disjoint
            }
        }
        CHECK(seen.size() == n);  // exhaustive

        const SplitBundle again = split(dataset, options);
        CHECK(again.generator_train == bundle.generator_train);
        CHECK(again.holdout == bundle.holdout);
        CHECK(again.validation == bundle.validation);
    }
}

TEST_CASE("split: validation errors") {
    const Dataset dataset = testutil::patterned_dataset(50, 2, 0.5, 1);
    SplitOptions options;
    options.ratios = {0.5, 0.4, 0.2};  // sums to 1.1
    CHECK_THROWS_AS(split(dataset, options), ValidationError);

    options.ratios = {0.4, 0.4, 0.2};
    const Dataset tiny = testutil::patterned_dataset(2, 2, 0.5, 1);
    CHECK_THROWS_AS(split(tiny, options), ValidationError);

    // stratification with a class of fewer than 3 members
    const Dataset lopsided = [&] {
        std::vector<Row> rows = testutil::patterned_dataset(30, 2, 0.0, 2).rows();
        rows[0][2] = Cell::category(1);
        return Dataset(dataset.schema(), std::move(rows));
    }();
    CHECK_THROWS_AS(split(lopsided, options), ValidationError);
    options.stratified = false;
    CHECK_NOTHROW(split(lopsided, options));
}

TEST_CASE("concat: cardinality, identity, category union") {
    const Dataset d40 = testutil::patterned_dataset(40, 3, 0.5, 21);
    const Dataset d40b = testutil::patterned_dataset(40, 3, 0.5, 22);
    CHECK(concat(d40, d40b).row_count() == 80);

    const Dataset empty(d40.schema(), {});
    CHECK(concat(d40, empty) == d40);
    CHECK(concat(empty, d40) == d40);

    // categorical columns {A,B} and {B,C} merge to {A,B,C}
    const Schema sa({testutil::categorical_col("c", {"A", "B"}),
                     testutil::label_col("y", {"n", "p"})});
    const Schema sb({testutil::categorical_col("c", {"B", "C"}),
                     testutil::label_col("y", {"n", "p"})});
    const Dataset da(sa, {{Cell::category(0), Cell::category(0)},
                          {Cell::category(1), Cell::category(1)}});
    const Dataset db(sb, {{Cell::category(0), Cell::category(0)},
                          {Cell::category(1), Cell::category(0)}});
    const Dataset merged = concat(da, db);
    CHECK(merged.schema()[0].categories == std::vector<std::string>{"A", "B", "C"});
    // db's "B" (index 0) must map to merged index 1, its "C" to 2
    CHECK(merged.cell(2, 0).category() == 1);
    CHECK(merged.cell(3, 0).category() == 2);

    const Schema mismatched({testutil::numeric_col("c"), testutil::label_col("y", {"n", "p"})});
    CHECK_THROWS_AS(concat(da, Dataset(mismatched, {})), ValidationError);
}

TEST_CASE("concat: associativity and positive-rate linearity") {
    testutil::Rng rng(31);
    for (int round = 0; round < 40; ++round) {
        const Schema schema = testutil::fuzz_schema(rng, 3, false);
        const Dataset a = testutil::fuzz_dataset(rng, schema, rng.next_index(20));
        const Dataset b = testutil::fuzz_dataset(rng, schema, rng.next_index(20));
        const Dataset c = testutil::fuzz_dataset(rng, schema, 1 + rng.next_index(20));
        CHECK(concat(concat(a, b), c).rows() == concat(a, concat(b, c)).rows());

        const Dataset ab = concat(a, b);
        if (ab.row_count() > 0) {
            const double lhs = positive_rate(ab, "pos").value;
            const double rhs = (static_cast<double>(a.row_count()) * positive_rate(a, "pos").value +
                                static_cast<double>(b.row_count()) * positive_rate(b, "pos").value) /
                               static_cast<double>(ab.row_count());
            CHECK(std::abs(lhs - rhs) < 1e-12);
        }
    }
}

TEST_CASE("positive_rate") {
    // CDR5-style fixture: 37 positives of 913 rows
    std::vector<Row> rows;
    const Schema schema({testutil::numeric_col("x"), testutil::label_col("y", {"neg", "pos"})});
    for (int i = 0; i < 913; ++i) {
        rows.push_back({Cell::number(i), Cell::category(i < 37 ? 1 : 0)});
    }
    const Dataset cdr(schema, std::move(rows));
    CHECK(positive_rate(cdr, "pos").value == doctest::Approx(37.0 / 913.0).epsilon(1e-12));
    CHECK(positive_rate(cdr, "pos").value == doctest::Approx(0.040526).epsilon(1e-4));

    // all-positive dataset
    const Dataset all_pos(schema, {{Cell::number(0), Cell::category(1)},
                                   {Cell::number(1), Cell::category(1)}});
    CHECK(positive_rate(all_pos, "pos").value == 1.0);

    // empty dataset carries the explicit flag
    const PositiveRate empty = positive_rate(Dataset(schema, {}), "pos");
    CHECK(empty.empty);
    CHECK(empty.value == 0.0);

    CHECK_THROWS_AS(positive_rate(all_pos, "bogus"), ValidationError);

    // brute-force count oracle on a fuzzed table
    testutil::Rng rng(55);
    const Dataset fuzzed = testutil::fuzz_dataset(rng, schema, 200);
    std::size_t count = 0;
    for (const Row& row : fuzzed.rows()) {
        if (row[1].category() == 1) ++count;
    }
    CHECK(positive_rate(fuzzed, "pos").value ==
          doctest::Approx(static_cast<double>(count) / 200.0).epsilon(1e-12));
}

TEST_CASE("impute_median_mode fills features only") {
    const Schema schema({testutil::numeric_col("x"),
                         testutil::categorical_col("c", {"a", "b"}),
                         testutil::label_col("y", {"n", "p"})});
    const Dataset dataset(schema, {
        {Cell::number(1), Cell::category(1), Cell::category(0)},
        {Cell::missing(), Cell::category(1), Cell::category(0)},
        {Cell::number(5), Cell::missing(), Cell::category(1)},
        {Cell::number(9), Cell::category(0), Cell::category(1)},
    });
    const Dataset filled = impute_median_mode(dataset);
    CHECK(filled.cell(1, 0).number() == 5.0);   // median of {1,5,9}
    CHECK(filled.cell(2, 1).category() == 1);   // mode of {b,b,a}
    CHECK(filled.cell(0, 2).category() == 0);   // labels untouched
}
