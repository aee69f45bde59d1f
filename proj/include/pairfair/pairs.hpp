#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairfair/data.hpp"
#include "pairfair/kv_config.hpp"
#include "pairfair/pair_set.hpp"

namespace pairfair {

/// Surrogate-expert matching rule: pairs differ on the protected column by at
/// least `min_gap` and agree on every other non-ignored column.
///
/// Every column that is neither protected nor ignored is constrained:
/// categoricals must be equal, numerics must lie within their tolerance
/// (default 0, i.e. equal). Missing cells never match.
///
/// Config keys: protected_column, min_gap, exact_match_columns,
/// numeric_tolerance.<column>, ignore_columns, disjoint, max_pairs, seed.
struct MatchSpec {
    std::string protected_column;
    double min_gap = 0.0;
    std::vector<std::string> exact_match_columns;
    std::map<std::string, double> numeric_tolerance;
    std::vector<std::string> ignore_columns;
    bool disjoint = true;
    std::optional<std::size_t> max_pairs;
    std::uint64_t seed = 0;

    static MatchSpec from_config(const KvConfig& cfg);
    static MatchSpec load(const std::filesystem::path& path);
    KvConfig to_config() const;

    /// Checks the spec against a schema; throws DataError.
    void validate(const FeatureSchema& schema) const;
};

struct ConstraintStat {
    std::string column;
    std::string rule;              // "gap>=10", "equal", "within 2"
    std::uint64_t pairs_passing = 0;  // unordered row pairs meeting this constraint alone
};

struct MatchStats {
    std::size_t rows = 0;
    std::uint64_t total_row_pairs = 0;
    std::vector<ConstraintStat> constraints;
    std::size_t blocks = 0;
    std::uint64_t exact_candidates = 0;  // pairs agreeing on all exact columns
    std::uint64_t eligible_pairs = 0;    // pairs meeting every constraint
    std::size_t selected = 0;

    std::string summary() const;
};

struct MiningResult {
    PairSet pairs;
    MatchStats stats;
};

/// Hash-blocks rows on exact-match values, then filters tolerance and gap
/// constraints inside each block. Output is sorted by (i, j).
/// Throws EmptyResultError (carrying the statistics summary) when nothing matches.
MiningResult mine_pairs(const Dataset& dataset, const MatchSpec& spec);

/// Pair file: `i,j[,weight]` rows with an optional header; 0-based dataset rows.
PairSet load_pairs(const std::filesystem::path& path, const Dataset& dataset);
PairSet parse_pairs(const std::string& text, std::size_t num_rows);
std::string pairs_to_csv(const PairSet& pairs);

/// Uniform sample without replacement, original order preserved.
PairSet subsample_pairs(const PairSet& pairs, std::size_t n, std::uint64_t seed);

}  // namespace pairfair
