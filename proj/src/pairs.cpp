#include "pairfair/pairs.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "pairfair/csv.hpp"
#include "pairfair/error.hpp"
#include "pairfair/rng.hpp"

namespace pairfair {

double PairSet::total_weight() const {
    double total = 0.0;
    for (const auto& p : pairs) total += p.weight;
    return total;
}

void PairSet::validate(std::size_t num_rows) const {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& p = pairs[k];
        if (p.i >= num_rows || p.j >= num_rows) {
            throw DataError(fmt::format("pair {} ({}, {}) references a row outside [0, {})", k, p.i, p.j, num_rows));
        }
        if (p.i == p.j) throw DataError(fmt::format("pair {} is a self-pair on row {}", k, p.i));
        if (!(p.weight > 0.0) || !std::isfinite(p.weight)) {
            throw DataError(fmt::format("pair {} has non-positive weight {}", k, p.weight));
        }
    }
}

void PairSet::canonicalize() {
    for (auto& p : pairs) {
        if (p.i > p.j) std::swap(p.i, p.j);
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const ConsistencyPair& a, const ConsistencyPair& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
}

MatchSpec MatchSpec::from_config(const KvConfig& cfg) {
    MatchSpec spec;
    spec.protected_column = cfg.get("protected_column");
    spec.min_gap = parse_double(cfg.get("min_gap"), cfg.origin() + ": min_gap");
    spec.exact_match_columns = cfg.get_list("exact_match_columns");
    for (const auto& [column, value] : cfg.with_prefix("numeric_tolerance.")) {
        spec.numeric_tolerance[column] = parse_double(value, cfg.origin() + ": numeric_tolerance." + column);
    }
    spec.ignore_columns = cfg.get_list("ignore_columns");
    spec.disjoint = cfg.get_bool("disjoint", true);
    if (const auto cap = cfg.find("max_pairs"); cap && !cap->empty()) {
        const auto v = parse_int(*cap, cfg.origin() + ": max_pairs");
        if (v < 1) throw DataError(cfg.origin() + ": max_pairs must be >= 1");
        spec.max_pairs = static_cast<std::size_t>(v);
    }
    spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    return spec;
}

MatchSpec MatchSpec::load(const std::filesystem::path& path) { return from_config(KvConfig::load(path)); }

KvConfig MatchSpec::to_config() const {
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
        return s;
    };
    KvConfig cfg;
    cfg.set("protected_column", protected_column);
    cfg.set("min_gap", csv::format_double(min_gap));
    cfg.set("exact_match_columns", join(exact_match_columns));
    for (const auto& [c, t] : numeric_tolerance) cfg.set("numeric_tolerance." + c, csv::format_double(t));
    cfg.set("ignore_columns", join(ignore_columns));
    cfg.set("disjoint", disjoint ? "true" : "false");
    cfg.set("max_pairs", max_pairs ? std::to_string(*max_pairs) : "");
    cfg.set("seed", std::to_string(seed));
    return cfg;
}

void MatchSpec::validate(const FeatureSchema& schema) const {
    auto contains = [](const std::vector<std::string>& v, const std::string& s) {
        return std::find(v.begin(), v.end(), s) != v.end();
    };
    schema.index_of(protected_column);
    if (!(min_gap > 0.0)) throw DataError(fmt::format("min_gap must be > 0, got {}", min_gap));
    for (const auto& c : exact_match_columns) {
        schema.index_of(c);
        if (c == protected_column) throw DataError("protected column '" + c + "' cannot be an exact-match column");
        if (contains(ignore_columns, c)) throw DataError("column '" + c + "' is both exact-match and ignored");
        if (numeric_tolerance.count(c) && numeric_tolerance.at(c) != 0.0) {
            throw DataError("column '" + c + "' is exact-match but has a non-zero tolerance");
        }
    }
    for (const auto& c : ignore_columns) {
        schema.index_of(c);
        if (c == protected_column) throw DataError("protected column '" + c + "' cannot be ignored");
    }
    for (const auto& [c, tol] : numeric_tolerance) {
        const auto idx = schema.index_of(c);
        if (schema.columns[idx].kind != ColumnKind::numeric) {
            throw DataError("tolerance given for non-numeric column '" + c + "'");
        }
        if (!(tol >= 0.0) || !std::isfinite(tol)) throw DataError("tolerance for '" + c + "' must be >= 0");
        if (c == protected_column) throw DataError("protected column cannot carry a tolerance");
    }
    const auto& target = schema.columns[schema.target_index()].name;
    if (!contains(ignore_columns, target)) {
        throw DataError("target column '" + target + "' must be listed in ignore_columns");
    }
}

std::string MatchStats::summary() const {
    std::string out = fmt::format("rows: {}\nrow pairs: {}\n", rows, total_row_pairs);
    for (const auto& c : constraints) {
        out += fmt::format("  {} {}: {} pairs\n", c.column, c.rule, c.pairs_passing);
    }
    out += fmt::format("blocks: {}\nexact-match candidates: {}\neligible pairs: {}\nselected pairs: {}\n", blocks,
                       exact_candidates, eligible_pairs, selected);
    return out;
}

namespace {

std::uint64_t choose2(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

// Unordered pairs whose sorted values differ by at most `tol` (within = true)
// or by at least `tol` (within = false).
std::uint64_t count_by_distance(std::vector<double> v, double tol, bool within) {
    std::sort(v.begin(), v.end());
    std::uint64_t close = 0;
    std::size_t lo = 0;
    for (std::size_t hi = 0; hi < v.size(); ++hi) {
        if (within) {
            while (v[hi] - v[lo] > tol) ++lo;
        } else {
            while (lo < hi && v[hi] - v[lo] >= tol) ++lo;
        }
        close += hi - lo;
    }
    return within ? close : choose2(v.size()) - close;
}

template <typename T>
std::uint64_t count_equal(const std::vector<T>& v) {
    std::map<T, std::uint64_t> counts;
    for (const auto& x : v) ++counts[x];
    std::uint64_t total = 0;
    for (const auto& [_, c] : counts) total += choose2(c);
    return total;
}

struct Tolerance {
    std::size_t column;
    double tol;
};

}  // namespace

MiningResult mine_pairs(const Dataset& dataset, const MatchSpec& spec) {
    const auto& schema = dataset.schema;
    spec.validate(schema);
    const std::size_t n = dataset.size();
    const std::size_t prot = schema.index_of(spec.protected_column);
    const bool prot_numeric = schema.columns[prot].kind == ColumnKind::numeric;
    const std::set<std::string> ignored(spec.ignore_columns.begin(), spec.ignore_columns.end());

    std::vector<std::size_t> exact;
    std::vector<Tolerance> within;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        const auto& col = schema.columns[c];
        if (c == prot || ignored.count(col.name)) continue;
        const auto tol = spec.numeric_tolerance.find(col.name);
        if (col.kind == ColumnKind::numeric && tol != spec.numeric_tolerance.end() && tol->second > 0.0) {
            within.push_back({c, tol->second});
        } else {
            exact.push_back(c);
        }
    }

    auto missing = [&](std::size_t row, std::size_t c) {
        return schema.columns[c].kind == ColumnKind::numeric ? std::isnan(dataset.numeric(row, c))
                                                             : dataset.code(row, c) < 0;
    };

    MatchStats stats;
    stats.rows = n;
    stats.total_row_pairs = choose2(n);

    // Per-constraint statistics, each over the rows where that column is present.
    {
        std::vector<double> pv;
        std::vector<std::int32_t> pc;
        for (std::size_t r = 0; r < n; ++r) {
            if (missing(r, prot)) continue;
            if (prot_numeric) pv.push_back(dataset.numeric(r, prot));
            else pc.push_back(dataset.code(r, prot));
        }
        if (prot_numeric) {
            stats.constraints.push_back({spec.protected_column, "gap>=" + csv::format_double(spec.min_gap),
                                         count_by_distance(pv, spec.min_gap, false)});
        } else {
            stats.constraints.push_back({spec.protected_column, "differs", choose2(pc.size()) - count_equal(pc)});
        }
        for (auto c : exact) {
            std::uint64_t passing = 0;
            if (schema.columns[c].kind == ColumnKind::numeric) {
                std::vector<double> v;
                for (std::size_t r = 0; r < n; ++r) if (!missing(r, c)) v.push_back(dataset.numeric(r, c));
                passing = count_equal(v);
            } else {
                std::vector<std::int32_t> v;
                for (std::size_t r = 0; r < n; ++r) if (!missing(r, c)) v.push_back(dataset.code(r, c));
                passing = count_equal(v);
            }
            stats.constraints.push_back({schema.columns[c].name, "equal", passing});
        }
        for (const auto& t : within) {
            std::vector<double> v;
            for (std::size_t r = 0; r < n; ++r) if (!missing(r, t.column)) v.push_back(dataset.numeric(r, t.column));
            stats.constraints.push_back({schema.columns[t.column].name, "within " + csv::format_double(t.tol),
                                         count_by_distance(v, t.tol, true)});
        }
    }

    // Hash-block on the exact-match values.
    std::unordered_map<std::string, std::size_t> block_of;
    std::vector<std::vector<std::size_t>> blocks;
    std::string key;
    for (std::size_t r = 0; r < n; ++r) {
        bool skip = missing(r, prot);
        for (auto c : exact) skip = skip || missing(r, c);
        for (const auto& t : within) skip = skip || missing(r, t.column);
        if (skip) continue;
        key.clear();
        for (auto c : exact) {
            if (schema.columns[c].kind == ColumnKind::numeric) {
                double v = dataset.numeric(r, c);
                if (v == 0.0) v = 0.0;  // fold -0
                char buf[sizeof(double)];
                std::memcpy(buf, &v, sizeof v);
                key.append(buf, sizeof buf);
            } else {
                const auto code = dataset.code(r, c);
                char buf[sizeof code];
                std::memcpy(buf, &code, sizeof code);
                key.append(buf, sizeof buf);
            }
        }
        const auto [it, fresh] = block_of.try_emplace(key, blocks.size());
        if (fresh) blocks.emplace_back();
        blocks[it->second].push_back(r);
    }
    stats.blocks = blocks.size();

    auto compatible = [&](std::size_t a, std::size_t b) {
        for (const auto& t : within) {
            if (std::abs(dataset.numeric(a, t.column) - dataset.numeric(b, t.column)) > t.tol) return false;
        }
        if (prot_numeric) return std::abs(dataset.numeric(a, prot) - dataset.numeric(b, prot)) >= spec.min_gap;
        return dataset.code(a, prot) != dataset.code(b, prot);
    };

    PairSet result;
    result.provenance = "mined";
    for (const auto& block : blocks) {
        stats.exact_candidates += choose2(block.size());
        for (std::size_t x = 0; x < block.size(); ++x) {
            for (std::size_t y = x + 1; y < block.size(); ++y) {
                if (!compatible(block[x], block[y])) continue;
                ++stats.eligible_pairs;
                if (!spec.disjoint) result.pairs.push_back({block[x], block[y], 1.0});
            }
        }
    }

    if (spec.disjoint) {
        // Greedy matching: visit rows in seeded order, pair each unused row with
        // the first unused compatible row of its block in that same order.
        Rng rng(spec.seed);
        const auto order = rng.permutation(n);
        std::vector<std::size_t> position(n);
        for (std::size_t k = 0; k < n; ++k) position[order[k]] = k;
        std::vector<std::size_t> block_id(n, SIZE_MAX);
        auto shuffled = blocks;
        for (std::size_t b = 0; b < shuffled.size(); ++b) {
            std::sort(shuffled[b].begin(), shuffled[b].end(),
                      [&](std::size_t a, std::size_t c) { return position[a] < position[c]; });
            for (auto r : shuffled[b]) block_id[r] = b;
        }
        std::vector<std::uint8_t> used(n, 0);
        for (auto r : order) {
            if (used[r] || block_id[r] == SIZE_MAX) continue;
            for (auto other : shuffled[block_id[r]]) {
                if (other == r || used[other] || !compatible(r, other)) continue;
                used[r] = used[other] = 1;
                result.pairs.push_back({r, other, 1.0});
                break;
            }
        }
    }

    result.canonicalize();
    if (spec.max_pairs && result.size() > *spec.max_pairs) {
        result = subsample_pairs(result, *spec.max_pairs, Rng::mix(spec.seed, 1));
        result.provenance = "mined";
    }
    stats.selected = result.size();
    if (result.empty()) throw EmptyResultError("no consistency pairs found\n" + stats.summary());
    return {std::move(result), std::move(stats)};
}

PairSet parse_pairs(const std::string& text, std::size_t num_rows) {
    std::istringstream in(text);
    csv::Reader reader(in);
    std::vector<std::string> fields;
    std::size_t line = 0;
    PairSet set;
    set.provenance = "external file";
    bool first = true;
    auto is_index = [](const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
    };
    while (reader.next(fields, line)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (first && !fields.empty() && !is_index(fields[0])) {  // header
            first = false;
            continue;
        }
        first = false;
        if (fields.size() < 2 || fields.size() > 3) {
            throw DataError(fmt::format("pair file line {}: expected i,j[,weight]", line));
        }
        if (!is_index(fields[0]) || !is_index(fields[1])) {
            throw DataError(fmt::format("pair file line {}: indices must be non-negative integers", line));
        }
        ConsistencyPair p;
        p.i = static_cast<std::size_t>(parse_int(fields[0], fmt::format("pair file line {}", line)));
        p.j = static_cast<std::size_t>(parse_int(fields[1], fmt::format("pair file line {}", line)));
        if (fields.size() == 3 && !fields[2].empty()) {
            p.weight = parse_double(fields[2], fmt::format("pair file line {}", line));
        }
        if (p.i >= num_rows || p.j >= num_rows) {
            throw DataError(fmt::format("pair file line {}: dangling index ({}, {}) for a dataset of {} rows", line,
                                        p.i, p.j, num_rows));
        }
        if (p.i == p.j) throw DataError(fmt::format("pair file line {}: self-pair on row {}", line, p.i));
        if (!(p.weight > 0.0)) {
            throw DataError(fmt::format("pair file line {}: non-positive weight {}", line, p.weight));
        }
        set.pairs.push_back(p);
    }
    if (set.empty()) throw EmptyResultError("pair file contains no pairs");
    return set;
}

PairSet load_pairs(const std::filesystem::path& path, const Dataset& dataset) {
    return parse_pairs(csv::read_file(path), dataset.size());
}

std::string pairs_to_csv(const PairSet& pairs) {
    std::string out = "i,j,weight\n";
    for (const auto& p : pairs.pairs) out += fmt::format("{},{},{}\n", p.i, p.j, csv::format_double(p.weight));
    return out;
}

PairSet subsample_pairs(const PairSet& pairs, std::size_t n, std::uint64_t seed) {
    if (n < 1 || n > pairs.size()) {
        throw DataError(fmt::format("cannot sample {} pairs from a set of {}", n, pairs.size()));
    }
    Rng rng(seed);
    std::vector<std::size_t> idx(pairs.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    for (std::size_t k = 0; k < n; ++k) {
        const auto pick = k + static_cast<std::size_t>(rng.below(idx.size() - k));
        std::swap(idx[k], idx[pick]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    PairSet out;
    out.provenance = pairs.provenance;
    out.pairs.reserve(n);
    for (auto k : idx) out.pairs.push_back(pairs.pairs[k]);
    return out;
}

}  // namespace pairfair
