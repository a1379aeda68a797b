#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "prro/table.hpp"

namespace prro {

// Schema sidecar: key-value text pinning column kinds, category order, the
// label column, and the positive label. Categories may be omitted per
// column, in which case they are inferred from the data in first-appearance
// order at load time.
struct SchemaSidecar {
    Schema schema;
    std::optional<std::string> positive_label;
};

SchemaSidecar load_schema_sidecar(const std::filesystem::path& path);
void save_schema_sidecar(const Schema& schema, const std::filesystem::path& path,
                         const std::optional<std::string>& positive_label = std::nullopt);

// RFC-4180 CSV with a mandatory header row; the empty field is the missing
// marker. Rows with a missing label are rejected. Errors name the offending
// 1-based data row and column.
Dataset load_csv(const std::filesystem::path& path, const Schema& schema);

// Kind inference: a column whose non-missing cells all parse as numbers is
// numeric, otherwise categorical with categories in first-appearance order.
// The label column is chosen by name, or defaults to the last column.
Dataset load_csv_infer(const std::filesystem::path& path,
                       std::optional<std::string> label_column = std::nullopt);

// Loads with the sidecar when present next to (or given for) the file,
// otherwise by inference.
Dataset load_csv_auto(const std::filesystem::path& csv_path,
                      const std::optional<std::filesystem::path>& sidecar_path,
                      std::optional<std::string> label_column = std::nullopt);

void save_csv(const Dataset& dataset, const std::filesystem::path& path);

// Shortest round-trip decimal rendering shared by the CSV and sentence codecs.
std::string format_number(double value);
std::optional<double> parse_number(std::string_view text);

// Pipe-separated lists with backslash escaping, used by the sidecar
// formats (schema categories, column permutations).
std::string escape_list_item(const std::string& value);
std::vector<std::string> split_escaped_list(const std::string& text);

}  // namespace prro
