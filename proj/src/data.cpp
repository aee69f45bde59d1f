#include "pairfair/data.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "pairfair/csv.hpp"
#include "pairfair/error.hpp"
#include "pairfair/rng.hpp"

namespace pairfair {

std::string to_string(ColumnKind kind) { return kind == ColumnKind::numeric ? "numeric" : "categorical"; }

std::string to_string(ColumnRole role) {
    switch (role) {
        case ColumnRole::feature: return "feature";
        case ColumnRole::protected_attr: return "protected";
        case ColumnRole::target: return "target";
        case ColumnRole::ignored: return "ignored";
    }
    return "feature";
}

namespace {

ColumnKind parse_kind(const std::string& s, const std::string& column) {
    if (s == "categorical") return ColumnKind::categorical;
    if (s == "numeric") return ColumnKind::numeric;
    throw DataError("column '" + column + "': unknown kind '" + s + "'");
}

ColumnRole parse_role(const std::string& s, const std::string& column) {
    if (s == "feature") return ColumnRole::feature;
    if (s == "protected") return ColumnRole::protected_attr;
    if (s == "target") return ColumnRole::target;
    if (s == "ignored") return ColumnRole::ignored;
    throw DataError("column '" + column + "': unknown role '" + s + "'");
}

}  // namespace

FeatureSchema FeatureSchema::from_config(const KvConfig& cfg) {
    FeatureSchema schema;
    schema.target_positive_value = cfg.get("target_positive_value");
    if (cfg.has("missing_values")) schema.missing_values = cfg.get_list("missing_values");
    schema.keep_protected_in_model = cfg.get_bool("keep_protected_in_model", true);
    for (const auto& [name, value] : cfg.with_prefix("column.")) {
        std::istringstream words(value);
        std::string kind, role, extra;
        words >> kind >> role;
        if (kind.empty() || role.empty() || (words >> extra)) {
            throw DataError(cfg.origin() + ": column." + name + " must be '<kind> <role>'");
        }
        schema.columns.push_back({name, parse_kind(kind, name), parse_role(role, name), {}});
    }
    schema.validate();
    return schema;
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) { return from_config(KvConfig::load(path)); }

KvConfig FeatureSchema::to_config() const {
    KvConfig cfg;
    cfg.set("target_positive_value", target_positive_value);
    std::string missing;
    for (std::size_t i = 0; i < missing_values.size(); ++i) missing += (i ? "," : "") + missing_values[i];
    cfg.set("missing_values", missing);
    cfg.set("keep_protected_in_model", keep_protected_in_model ? "true" : "false");
    for (const auto& c : columns) cfg.set("column." + c.name, to_string(c.kind) + " " + to_string(c.role));
    return cfg;
}

void FeatureSchema::validate() const {
    if (columns.empty()) throw DataError("schema has no columns");
    std::set<std::string> names;
    std::size_t targets = 0;
    for (const auto& c : columns) {
        if (c.name.empty()) throw DataError("schema column with empty name");
        if (!names.insert(c.name).second) throw DataError("duplicate schema column '" + c.name + "'");
        if (c.role == ColumnRole::target) ++targets;
    }
    if (targets != 1) throw DataError(fmt::format("schema must have exactly one target column, found {}", targets));
    if (target_positive_value.empty()) throw DataError("schema target_positive_value is empty");
}

std::size_t FeatureSchema::target_index() const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].role == ColumnRole::target) return i;
    }
    throw DataError("schema has no target column");
}

std::optional<std::size_t> FeatureSchema::find(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t FeatureSchema::index_of(const std::string& name) const {
    if (auto i = find(name)) return *i;
    throw DataError("unknown column '" + name + "'");
}

std::vector<std::size_t> FeatureSchema::protected_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].role == ColumnRole::protected_attr) out.push_back(i);
    }
    return out;
}

bool FeatureSchema::is_missing(const std::string& raw) const {
    if (raw.empty()) return true;
    return std::find(missing_values.begin(), missing_values.end(), raw) != missing_values.end();
}

std::string Dataset::cell_text(std::size_t row, std::size_t col) const {
    const auto& spec = schema.columns[col];
    if (spec.kind == ColumnKind::numeric) {
        const double v = columns[col].values[row];
        return std::isnan(v) ? std::string{} : csv::format_double(v);
    }
    const auto code = columns[col].codes[row];
    return code < 0 ? std::string{} : spec.vocabulary[static_cast<std::size_t>(code)];
}

Dataset parse_csv(std::istream& in, const FeatureSchema& schema) {
    schema.validate();
    csv::Reader reader(in);
    std::vector<std::string> fields;
    std::size_t line = 0;
    if (!reader.next(fields, line)) throw DataError("empty file: no header row");

    std::vector<std::string> expected;
    for (const auto& c : schema.columns) expected.push_back(c.name);
    if (fields != expected) {
        throw DataError("header mismatch: expected [" + csv::join(expected) + "], got [" + csv::join(fields) + "]");
    }

    const std::size_t ncols = schema.columns.size();
    const std::size_t target = schema.target_index();
    Dataset ds;
    ds.schema = schema;
    ds.columns.resize(ncols);
    std::vector<std::vector<std::string>> raw_cats(ncols);

    while (reader.next(fields, line)) {
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        ++ds.diagnostics.rows_read;
        if (fields.size() != ncols) {
            throw DataError(fmt::format("line {}: expected {} fields, found {}", line, ncols, fields.size()));
        }
        bool drop = false;
        for (std::size_t c = 0; c < ncols; ++c) {
            if (schema.columns[c].role != ColumnRole::ignored && schema.is_missing(fields[c])) {
                drop = true;
                break;
            }
        }
        if (drop) {
            ++ds.diagnostics.dropped;
            if (ds.diagnostics.dropped_lines.size() < 100) ds.diagnostics.dropped_lines.push_back(line);
            continue;
        }
        for (std::size_t c = 0; c < ncols; ++c) {
            const auto& spec = schema.columns[c];
            const std::string& raw = fields[c];
            if (spec.kind == ColumnKind::numeric) {
                double v = std::nan("");
                if (!schema.is_missing(raw)) {
                    v = parse_double(raw, fmt::format("line {}, column '{}'", line, spec.name));
                }
                ds.columns[c].values.push_back(v);
            } else {
                raw_cats[c].push_back(schema.is_missing(raw) ? std::string{} : raw);
            }
        }
        ds.labels.push_back(fields[target] == schema.target_positive_value ? 1 : 0);
    }
    if (ds.labels.empty()) {
        throw DataError(fmt::format("no usable rows ({} read, {} dropped for missing values)",
                                    ds.diagnostics.rows_read, ds.diagnostics.dropped));
    }

    for (std::size_t c = 0; c < ncols; ++c) {
        auto& spec = ds.schema.columns[c];
        if (spec.kind != ColumnKind::categorical) continue;
        std::set<std::string> vocab;
        for (const auto& v : raw_cats[c]) {
            if (!v.empty()) vocab.insert(v);
        }
        spec.vocabulary.assign(vocab.begin(), vocab.end());
        std::unordered_map<std::string, std::int32_t> code_of;
        for (std::size_t k = 0; k < spec.vocabulary.size(); ++k) {
            code_of[spec.vocabulary[k]] = static_cast<std::int32_t>(k);
        }
        auto& codes = ds.columns[c].codes;
        codes.reserve(raw_cats[c].size());
        for (const auto& v : raw_cats[c]) codes.push_back(v.empty() ? -1 : code_of.at(v));
    }
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read data file: " + path.string());
    return parse_csv(in, schema);
}

std::vector<std::string> EncodedDataset::feature_names() const {
    std::vector<std::string> names;
    names.reserve(columns.size());
    for (const auto& c : columns) names.push_back(c.name);
    return names;
}

std::optional<std::size_t> EncodedDataset::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return i;
    }
    return std::nullopt;
}

EncodedDataset EncodedDataset::subset(std::span<const std::size_t> rows) const {
    EncodedDataset out;
    out.columns = columns;
    out.matrix = matrix.select_rows(rows);
    out.labels.reserve(rows.size());
    out.row_origin.reserve(rows.size());
    for (auto r : rows) {
        out.labels.push_back(labels[r]);
        out.row_origin.push_back(row_origin[r]);
    }
    return out;
}

EncodedDataset encode(const Dataset& dataset) {
    const auto& schema = dataset.schema;
    EncodedDataset enc;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        const auto& spec = schema.columns[c];
        if (!spec.encoded(schema.keep_protected_in_model)) continue;
        if (spec.kind == ColumnKind::numeric) {
            enc.columns.push_back({spec.name, c, std::nullopt});
        } else {
            for (std::size_t k = 0; k < spec.vocabulary.size(); ++k) {
                enc.columns.push_back({spec.name + "=" + spec.vocabulary[k], c, static_cast<std::int32_t>(k)});
            }
        }
    }
    const std::size_t n = dataset.size();
    enc.matrix = Matrix(n, enc.columns.size());
    for (std::size_t f = 0; f < enc.columns.size(); ++f) {
        const auto& col = enc.columns[f];
        const auto& src = dataset.columns[col.source];
        for (std::size_t r = 0; r < n; ++r) {
            enc.matrix(r, f) = col.category ? (src.codes[r] == *col.category ? 1.0 : 0.0) : src.values[r];
        }
    }
    enc.labels = dataset.labels;
    enc.row_origin.resize(n);
    std::iota(enc.row_origin.begin(), enc.row_origin.end(), std::size_t{0});
    return enc;
}

std::vector<std::pair<std::size_t, std::string>> decode_row(const EncodedDataset& encoded, const Dataset& dataset,
                                                            std::size_t row) {
    std::vector<std::pair<std::size_t, std::string>> out;
    const auto values = encoded.matrix.row(row);
    for (std::size_t f = 0; f < encoded.columns.size(); ++f) {
        const auto& col = encoded.columns[f];
        const auto& spec = dataset.schema.columns[col.source];
        if (!col.category) {
            out.emplace_back(col.source, csv::format_double(values[f]));
        } else if (values[f] == 1.0) {
            out.emplace_back(col.source, spec.vocabulary[static_cast<std::size_t>(*col.category)]);
        }
    }
    return out;
}

std::string encoded_to_csv(const EncodedDataset& encoded) {
    std::vector<std::string> header{"row_origin", "label"};
    for (const auto& c : encoded.columns) header.push_back(c.name);
    std::string out = csv::join(header) + "\n";
    for (std::size_t r = 0; r < encoded.size(); ++r) {
        out += std::to_string(encoded.row_origin[r]);
        out += ',';
        out += encoded.labels[r] ? '1' : '0';
        for (double v : encoded.matrix.row(r)) {
            out += ',';
            out += csv::format_double(v);
        }
        out += '\n';
    }
    return out;
}

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

SplitResult pair_aware_split(const EncodedDataset& encoded, const PairSet& pairs, double test_ratio,
                             std::uint64_t seed) {
    if (!(test_ratio > 0.0 && test_ratio < 1.0)) {
        throw DataError(fmt::format("test ratio must lie in (0, 1), got {}", test_ratio));
    }
    const std::size_t n = encoded.size();
    if (n == 0) throw DataError("cannot split an empty dataset");
    pairs.validate(n);

    DisjointSets sets(n);
    for (const auto& p : pairs.pairs) sets.unite(p.i, p.j);
    // Components ordered by their smallest row.
    std::vector<std::vector<std::size_t>> components;
    std::vector<std::size_t> slot(n, SIZE_MAX);
    for (std::size_t r = 0; r < n; ++r) {
        const auto root = sets.find(r);
        if (slot[root] == SIZE_MAX) {
            slot[root] = components.size();
            components.emplace_back();
        }
        components[slot[root]].push_back(r);
    }

    const auto target = static_cast<std::size_t>(std::llround(test_ratio * static_cast<double>(n)));
    const double band = 0.02 * static_cast<double>(n);

    Rng rng(seed);
    std::vector<std::size_t> order = rng.permutation(components.size());
    // Components too large to fit inside the tolerance band are placed first,
    // largest first; everything else fills in shuffled order.
    std::stable_partition(order.begin(), order.end(),
                          [&](std::size_t c) { return static_cast<double>(components[c].size()) > band; });
    const auto large_end = std::find_if(order.begin(), order.end(), [&](std::size_t c) {
        return static_cast<double>(components[c].size()) <= band;
    });
    std::stable_sort(order.begin(), large_end,
                     [&](std::size_t a, std::size_t b) { return components[a].size() > components[b].size(); });

    std::vector<std::uint8_t> in_test(n, 0);
    std::size_t test_count = 0;
    for (auto c : order) {
        const auto size = components[c].size();
        if (size > target && size > n - target) {
            throw DataError(fmt::format(
                "cannot split: a connected pair component of {} rows exceeds both the test ({}) and train ({}) sizes",
                size, target, n - target));
        }
        if (test_count + size <= target) {
            for (auto r : components[c]) in_test[r] = 1;
            test_count += size;
        }
    }
    const double achieved = static_cast<double>(test_count) / static_cast<double>(n);
    if (std::abs(achieved - test_ratio) > 0.02 + 1e-12) {
        throw DataError(fmt::format("cannot reach test ratio {} within 2 points: achieved {} ({} of {} rows)",
                                    test_ratio, achieved, test_count, n));
    }

    std::vector<std::size_t> train_rows, test_rows;
    std::vector<std::size_t> local(n);
    for (std::size_t r = 0; r < n; ++r) {
        auto& rows = in_test[r] ? test_rows : train_rows;
        local[r] = rows.size();
        rows.push_back(r);
    }

    SplitResult split;
    split.seed = seed;
    split.test_ratio = test_ratio;
    split.train = encoded.subset(train_rows);
    split.test = encoded.subset(test_rows);
    split.train_pairs.provenance = pairs.provenance;
    split.test_pairs.provenance = pairs.provenance;
    for (const auto& p : pairs.pairs) {
        auto& dst = in_test[p.i] ? split.test_pairs : split.train_pairs;
        dst.pairs.push_back({local[p.i], local[p.j], p.weight});
    }
    return split;
}

}  // namespace pairfair
