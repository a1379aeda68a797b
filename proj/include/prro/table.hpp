#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prro/error.hpp"

namespace prro {

enum class ColumnKind { Numeric, Categorical };
enum class ColumnRole { Feature, Label };

// One table cell: missing, a finite number, or an index into the owning
// column's category list.
class Cell {
public:
    Cell() = default;

    static Cell missing() { return Cell(); }
    static Cell number(double value);
    static Cell category(std::int32_t index);

    bool is_missing() const noexcept { return tag_ == Tag::Missing; }
    bool is_number() const noexcept { return tag_ == Tag::Number; }
    bool is_category() const noexcept { return tag_ == Tag::Category; }

    double number() const;
    std::int32_t category() const;

    bool operator==(const Cell& other) const noexcept;

private:
    enum class Tag : std::uint8_t { Missing, Number, Category };
    Tag tag_ = Tag::Missing;
    double number_ = 0.0;
    std::int32_t category_ = -1;
};

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    ColumnRole role = ColumnRole::Feature;
    std::vector<std::string> categories;  // categorical only; ordered, unique, non-empty

    std::optional<std::int32_t> category_index(std::string_view label) const;
};

// Ordered column list with exactly one label column. Validated on
// construction; immutable afterwards.
class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<ColumnSchema> columns);

    std::size_t size() const noexcept { return columns_.size(); }
    bool empty() const noexcept { return columns_.empty(); }
    const ColumnSchema& operator[](std::size_t i) const { return columns_[i]; }
    const std::vector<ColumnSchema>& columns() const noexcept { return columns_; }

    std::size_t label_index() const;
    const ColumnSchema& label() const { return columns_[label_index()]; }
    std::vector<std::size_t> feature_indices() const;
    std::optional<std::size_t> index_of(std::string_view name) const;

    // Same names, kinds, and roles in the same order; category lists may differ.
    bool same_layout(const Schema& other) const;

    bool operator==(const Schema& other) const;

private:
    std::vector<ColumnSchema> columns_;
    std::size_t label_index_ = 0;
};

using Row = std::vector<Cell>;

// Immutable schema-typed table. Every operation below is a pure function
// of its inputs, so datasets are safe to share across threads.
class Dataset {
public:
    Dataset() = default;
    Dataset(Schema schema, std::vector<Row> rows);

    const Schema& schema() const noexcept { return schema_; }
    const std::vector<Row>& rows() const noexcept { return rows_; }
    const Row& row(std::size_t i) const { return rows_[i]; }
    std::size_t row_count() const noexcept { return rows_.size(); }
    std::size_t column_count() const noexcept { return schema_.size(); }
    const Cell& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }

    bool operator==(const Dataset& other) const;

private:
    Schema schema_;
    std::vector<Row> rows_;
};

struct SplitOptions {
    std::array<double, 3> ratios{0.4, 0.4, 0.2};
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct SplitBundle {
    Dataset generator_train;  // feeds the generator
    Dataset holdout;          // withheld from the generator for the leakage check
    Dataset validation;       // scores classifiers
    std::uint64_t seed = 0;
    std::array<double, 3> ratios{};
};

// Disjoint, exhaustive, seed-deterministic three-way split. Sizes follow
// floor arithmetic with remainders assigned to the parts in declared order
// (train, holdout, validation). Stratified mode applies the same rule per
// label class.
SplitBundle split(const Dataset& dataset, const SplitOptions& options);

// Row concatenation; schemas must agree in layout and categorical category
// lists are merged by union (a's order first, b's novel categories appended).
Dataset concat(const Dataset& a, const Dataset& b);

struct PositiveRate {
    double value = 0.0;
    bool empty = false;  // set (with value 0) for the empty dataset
};

PositiveRate positive_rate(const Dataset& dataset, std::string_view positive_label);

// Fills missing features with the column median (numeric) or modal
// category (categorical, ties to the lowest index). Missing labels pass
// through untouched. Columns with no observed value fall back to 0 / the
// first category.
Dataset impute_median_mode(const Dataset& dataset);

// Positions of label classes, used by several modules.
std::vector<std::size_t> rows_with_label(const Dataset& dataset, std::int32_t category);

}  // namespace prro
