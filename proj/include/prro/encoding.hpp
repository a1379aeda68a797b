#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "prro/table.hpp"

namespace prro {

// One row rendered as a "name: value, name: value, ..." sentence. The
// schema hash binds the sentence to the (possibly reordered) schema it was
// produced from.
struct EncodedRow {
    std::string text;
    std::string source_schema_hash;
};

struct ParsePolicy {
    enum class OnUnknownCategory { Reject, CoerceToNearest, DropRow };
    enum class OnNumericParseFail { Reject, DropRow };
    enum class OnMissingColumn { Reject, DropRow };

    OnUnknownCategory on_unknown_category = OnUnknownCategory::Reject;
    OnNumericParseFail on_numeric_parse_fail = OnNumericParseFail::Reject;
    OnMissingColumn on_missing_column = OnMissingColumn::Reject;
    double max_reject_fraction = 0.0;
};

struct RejectRecord {
    std::size_t line_no = 0;  // 1-based position in the corpus
    std::string text;
    std::string reason;
    std::string column;  // first offending segment's column, when known
};

struct ParseOutcome {
    bool accepted = false;
    bool dropped = false;  // excluded silently per DropRow policy
    Row row;
    RejectRecord reject;
};

struct EncodeOptions {
    // Replaces real column names with "Column 1", "Column 2", ... in both
    // directions, for generators that expect anonymous positional names.
    bool placeholder_names = false;
};

std::string schema_hash(const Schema& schema);

EncodedRow encode_row(const Row& row, const Schema& schema, const EncodeOptions& options = {});
std::vector<EncodedRow> encode_dataset(const Dataset& dataset, const EncodeOptions& options = {});

// Total: any byte sequence yields a row, a reject record, or a drop.
// Segments are matched to columns by name, so permuted segment order still
// parses; unknown segment names are handled by the unknown-category policy
// and a column with no segment by the missing-column policy.
ParseOutcome parse_sentence(const std::string& text, const Schema& schema,
                            const ParsePolicy& policy, const EncodeOptions& options = {});

struct CorpusParseResult {
    Dataset dataset;
    std::vector<RejectRecord> rejects;
    std::size_t dropped = 0;
};

// Accepted rows keep corpus order. Throws once the reject count provably
// exceeds max_reject_fraction of the corpus.
CorpusParseResult parse_corpus(const std::vector<std::string>& texts, const Schema& schema,
                               const ParsePolicy& policy, const EncodeOptions& options = {});

// Corpus file: UTF-8, one sentence per line, LF endings, first line a
// "#schema:<hash>" comment.
void save_corpus(const std::vector<EncodedRow>& rows, const std::filesystem::path& path);
std::vector<std::string> load_corpus_lines(const std::filesystem::path& path);
void save_rejects(const std::vector<RejectRecord>& rejects, const std::filesystem::path& path);

}  // namespace prro
