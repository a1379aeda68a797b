// Times the OpenMP kernels against their serial reference implementations
// on synthetic fixtures and checks that both produce identical results.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "prro/generator.hpp"
#include "prro/pruning.hpp"
#include "prro/reference.hpp"
#include "prro/reordering.hpp"
#include "prro/rng.hpp"
#include "prro/table.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

prro::Dataset make_fixture(std::size_t rows, std::size_t features, double positive_rate,
                           std::uint64_t seed) {
    std::vector<prro::ColumnSchema> columns;
    for (std::size_t f = 0; f < features; ++f) {
        prro::ColumnSchema col;
        col.name = "x" + std::to_string(f);
        columns.push_back(col);
    }
    prro::ColumnSchema label;
    label.name = "y";
    label.kind = prro::ColumnKind::Categorical;
    label.role = prro::ColumnRole::Label;
    label.categories = {"neg", "pos"};
    columns.push_back(label);

    prro::Rng rng(seed);
    std::vector<prro::Row> data;
    data.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        prro::Row row(features + 1);
        const bool positive = rng.next_unit() < positive_rate;
        const double t = rng.next_unit();
        for (std::size_t f = 0; f < features; ++f) {
            // positives share a monotone pattern; negatives are reversed
            const double base = positive ? t * static_cast<double>(f + 1)
                                         : t * static_cast<double>(features - f);
            row[f] = prro::Cell::number(base + 0.01 * rng.next_unit());
        }
        row[features] = prro::Cell::category(positive ? 1 : 0);
        data.push_back(std::move(row));
    }
    return prro::Dataset(prro::Schema(std::move(columns)), std::move(data));
}

struct BenchResult {
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
    bool identical = false;
};

void print_row(const char* name, const BenchResult& r) {
    std::printf("%-28s %10.1f ms %10.1f ms %8.2fx   %s\n", name, r.serial_ms, r.parallel_ms,
                r.serial_ms / r.parallel_ms, r.identical ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled at build time; comparing two serial runs\n");
#endif
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    // Signal pruning: 6000 rows x 12 features at 8% interest rate.
    {
        const prro::Dataset data = make_fixture(6000, 12, 0.08, 11);
        prro::PruningConfig config;
        config.interest_label = "pos";

        BenchResult r;
        auto t0 = Clock::now();
        const auto serial = prro::reference::prune_signal(data, config);
        r.serial_ms = millis_since(t0);
        t0 = Clock::now();
        const auto parallel = prro::prune_signal(data, config);
        r.parallel_ms = millis_since(t0);
        r.identical = serial.first == parallel.first &&
                      serial.second.kept_correlated == parallel.second.kept_correlated;
        print_row("prune_signal", r);
    }

    // Chain sampling: fit on 4000 rows, draw 400k rows.
    {
        const prro::Dataset data = make_fixture(4000, 8, 0.3, 12);
        const prro::ChainModel model = prro::fit_chain(data, prro::ChainConfig{});

        BenchResult r;
        auto t0 = Clock::now();
        const prro::Dataset serial = prro::reference::sample(model, 400000, 99);
        r.serial_ms = millis_since(t0);
        t0 = Clock::now();
        const prro::Dataset parallel = prro::sample(model, 400000, 99);
        r.parallel_ms = millis_since(t0);
        r.identical = serial == parallel;
        print_row("chain sample", r);
    }

    // Leakage check: 1500 synthetic rows against 2000 + 2000 references.
    {
        const prro::Dataset train = make_fixture(2000, 10, 0.3, 13);
        const prro::Dataset holdout = make_fixture(2000, 10, 0.3, 14);
        const prro::ChainModel model = prro::fit_chain(train, prro::ChainConfig{});
        const prro::Dataset synthetic = prro::sample(model, 1500, 7);

        BenchResult r;
        auto t0 = Clock::now();
        const prro::LeakageReport serial =
            prro::reference::leakage_check(synthetic, train, holdout);
        r.serial_ms = millis_since(t0);
        t0 = Clock::now();
        const prro::LeakageReport parallel = prro::leakage_check(synthetic, train, holdout);
        r.parallel_ms = millis_since(t0);
        r.identical = serial.frac_closer_to_train == parallel.frac_closer_to_train &&
                      serial.median_dcr_train == parallel.median_dcr_train &&
                      serial.median_dcr_holdout == parallel.median_dcr_holdout;
        print_row("leakage_check", r);
    }

    // Permutation importance: 24 features, 3000 rows, 5 repeats.
    {
        const prro::Dataset data = make_fixture(3000, 24, 0.4, 15);
        prro::TrainConfig train_config;
        train_config.positive_label = "pos";
        const prro::Classifier model =
            prro::train_classifier(prro::ClassifierKind::DecisionTree, data, train_config);
        prro::ImportanceOptions options;
        options.seed = 5;

        BenchResult r;
        auto t0 = Clock::now();
        const prro::FeatureRanking serial =
            prro::reference::permutation_importance(model, data, options);
        r.serial_ms = millis_since(t0);
        t0 = Clock::now();
        const prro::FeatureRanking parallel = prro::permutation_importance(model, data, options);
        r.parallel_ms = millis_since(t0);
        r.identical = serial.scores == parallel.scores && serial.order == parallel.order;
        print_row("permutation_importance", r);
    }

    return 0;
}
