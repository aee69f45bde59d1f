#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pairfair/kv_config.hpp"
#include "pairfair/matrix.hpp"
#include "pairfair/pair_set.hpp"

namespace pairfair {

enum class ColumnKind { categorical, numeric };
enum class ColumnRole { feature, protected_attr, target, ignored };

std::string to_string(ColumnKind kind);
std::string to_string(ColumnRole role);

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::categorical;
    ColumnRole role = ColumnRole::feature;
    // Filled during ingestion, sorted lexicographically.
    std::vector<std::string> vocabulary;

    bool encoded(bool keep_protected) const {
        return role == ColumnRole::feature || (role == ColumnRole::protected_attr && keep_protected);
    }
};

/// Column layout of a tabular file: kinds, roles and the positive target value.
///
/// Config file format (KvConfig), columns listed in file-header order:
///
///     target_positive_value = >50K
///     missing_values = ?
///     keep_protected_in_model = true
///     column.age = numeric protected
///     column.workclass = categorical feature
///     column.income = categorical target
struct FeatureSchema {
    std::vector<ColumnSpec> columns;
    std::string target_positive_value;
    std::vector<std::string> missing_values{"?", ""};
    bool keep_protected_in_model = true;

    static FeatureSchema from_config(const KvConfig& cfg);
    static FeatureSchema load(const std::filesystem::path& path);
    KvConfig to_config() const;

    /// Throws DataError on duplicate names or a target count other than one.
    void validate() const;

    std::size_t target_index() const;
    std::optional<std::size_t> find(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;  // throws DataError
    std::vector<std::size_t> protected_indices() const;
    bool is_missing(const std::string& raw) const;
};

/// Typed column storage. Categorical cells hold vocabulary codes; numeric
/// cells hold doubles. Ignored numeric columns may contain NaN for missing
/// cells since missing values only drop a row in modelled columns.
struct Column {
    std::vector<std::int32_t> codes;
    std::vector<double> values;
};

struct IngestDiagnostics {
    std::size_t rows_read = 0;
    std::size_t dropped = 0;
    std::vector<std::size_t> dropped_lines;  // physical line numbers, first 100
};

class Dataset {
public:
    FeatureSchema schema;
    std::vector<Column> columns;
    std::vector<std::uint8_t> labels;
    IngestDiagnostics diagnostics;

    std::size_t size() const noexcept { return labels.size(); }

    double numeric(std::size_t row, std::size_t col) const { return columns[col].values[row]; }
    std::int32_t code(std::size_t row, std::size_t col) const { return columns[col].codes[row]; }
    /// Canonical text of a cell (category name or shortest numeric form).
    std::string cell_text(std::size_t row, std::size_t col) const;
};

Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema);
Dataset parse_csv(std::istream& in, const FeatureSchema& schema);

/// Encoded column provenance: numeric pass-through or one indicator of a
/// categorical source column.
struct EncodedColumn {
    std::string name;
    std::size_t source = 0;
    std::optional<std::int32_t> category;

    bool operator==(const EncodedColumn&) const = default;
};

struct EncodedDataset {
    std::vector<EncodedColumn> columns;
    Matrix matrix;
    std::vector<std::uint8_t> labels;
    std::vector<std::size_t> row_origin;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t num_features() const noexcept { return columns.size(); }
    std::vector<std::string> feature_names() const;
    std::optional<std::size_t> feature_index(const std::string& name) const;

    EncodedDataset subset(std::span<const std::size_t> rows) const;
    bool operator==(const EncodedDataset&) const = default;
};

/// One-hot expansion. Column order: source order, then vocabulary order.
EncodedDataset encode(const Dataset& dataset);

/// Inverse of encode for one row: the typed raw cell text of every encoded
/// source column, in source order.
std::vector<std::pair<std::size_t, std::string>> decode_row(const EncodedDataset& encoded,
                                                            const Dataset& dataset, std::size_t row);

/// Columnar CSV: header `row_origin,label,<features...>`.
std::string encoded_to_csv(const EncodedDataset& encoded);

/// Pair-preserving partition. Pair indices are local to their partition.
struct SplitResult {
    EncodedDataset train;
    EncodedDataset test;
    PairSet train_pairs;
    PairSet test_pairs;
    std::uint64_t seed = 0;
    double test_ratio = 0.0;

    bool operator==(const SplitResult&) const = default;
};

SplitResult pair_aware_split(const EncodedDataset& encoded, const PairSet& pairs, double test_ratio,
                             std::uint64_t seed);

}  // namespace pairfair
