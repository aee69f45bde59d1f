#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pairfair/csv.hpp"
#include "pairfair/error.hpp"
#include "pairfair/pairs.hpp"
#include "support/fixtures.hpp"

using namespace pairfair;
using pairfair::fixture::dataset_from;

namespace {

const char* kSchema =
    "target_positive_value = 1\n"
    "missing_values = ?\n"
    "column.age = numeric protected\n"
    "column.job = categorical feature\n"
    "column.hours = numeric feature\n"
    "column.gain = numeric feature\n"
    "column.country = categorical ignored\n"
    "column.id = numeric ignored\n"
    "column.y = categorical target\n";

struct RawRow {
    double age;
    std::string job;
    double hours;
    double gain;
    std::string country;  // "?" is missing
    double id;
    int y;
};

std::string to_csv(const std::vector<RawRow>& rows) {
    std::string out = "age,job,hours,gain,country,id,y\n";
    for (const auto& r : rows) {
        out += csv::format_double(r.age) + "," + r.job + "," + csv::format_double(r.hours) + "," +
               csv::format_double(r.gain) + "," + r.country + "," + csv::format_double(r.id) + "," +
               std::to_string(r.y) + "\n";
    }
    return out;
}

std::vector<RawRow> random_rows(Rng& rng, std::size_t n) {
    const char* jobs[] = {"a", "b", "c"};
    const char* countries[] = {"us", "mx", "?"};
    std::vector<RawRow> rows;
    for (std::size_t r = 0; r < n; ++r) {
        rows.push_back({static_cast<double>(20 + rng.below(40)), jobs[rng.below(3)],
                        static_cast<double>(35 + 5 * rng.below(3)), static_cast<double>(rng.below(4)) * 0.5,
                        countries[rng.below(3)], static_cast<double>(r), static_cast<int>(rng.below(2))});
    }
    return rows;
}

// The match predicate written directly against raw values: job and country
// equal (missing never equal), hours within its tolerance, gain within its
// tolerance, age gap at least min_gap.
bool matches(const RawRow& a, const RawRow& b, double min_gap, double hours_tol, double gain_tol) {
    if (a.job != b.job) return false;
    if (a.country == "?" || b.country == "?" || a.country != b.country) return false;
    if (std::abs(a.hours - b.hours) > hours_tol) return false;
    if (std::abs(a.gain - b.gain) > gain_tol) return false;
    return std::abs(a.age - b.age) >= min_gap;
}

MatchSpec spec_for(double min_gap, double hours_tol, double gain_tol, bool disjoint, std::uint64_t seed = 0) {
    MatchSpec s;
    s.protected_column = "age";
    s.min_gap = min_gap;
    s.ignore_columns = {"y", "id"};
    if (hours_tol > 0) s.numeric_tolerance["hours"] = hours_tol;
    if (gain_tol > 0) s.numeric_tolerance["gain"] = gain_tol;
    s.disjoint = disjoint;
    s.seed = seed;
    return s;
}

std::set<std::pair<std::size_t, std::size_t>> brute_force(const std::vector<RawRow>& rows, double min_gap,
                                                          double hours_tol, double gain_tol) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            if (matches(rows[i], rows[j], min_gap, hours_tol, gain_tol)) out.insert({i, j});
        }
    }
    return out;
}

std::set<std::pair<std::size_t, std::size_t>> as_set(const PairSet& p) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (const auto& x : p.pairs) out.insert({x.i, x.j});
    return out;
}

}  // namespace

TEST(MinePairs, OnlyTheWideGapPairMatches) {
    // A(25) and B(40) agree elsewhere; C(30) and D(33) agree elsewhere.
    const std::vector<RawRow> rows{{25, "a", 40, 0, "us", 0, 1},
                                   {40, "a", 40, 0, "us", 1, 0},
                                   {30, "b", 45, 1, "mx", 2, 0},
                                   {33, "b", 45, 1, "mx", 3, 1}};
    const auto ds = dataset_from(kSchema, to_csv(rows));
    const auto result = mine_pairs(ds, spec_for(10, 0, 0, true));
    ASSERT_EQ(result.pairs.size(), 1u);
    EXPECT_EQ(result.pairs.pairs[0], (ConsistencyPair{0, 1, 1.0}));
}

TEST(MinePairs, SixRowsEqualExhaustiveEnumeration) {
    const std::vector<RawRow> rows{{20, "a", 40, 0, "us", 0, 1}, {35, "a", 40, 0, "us", 1, 0},
                                   {50, "a", 40, 0, "us", 2, 1}, {51, "a", 45, 0, "us", 3, 0},
                                   {22, "b", 40, 0, "us", 4, 0}, {60, "a", 40, 0, "?", 5, 1}};
    const auto ds = dataset_from(kSchema, to_csv(rows));
    const auto result = mine_pairs(ds, spec_for(10, 0, 0, false));
    EXPECT_EQ(as_set(result.pairs), brute_force(rows, 10, 0, 0));
    EXPECT_EQ(as_set(result.pairs), (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}, {1, 2}}));
}

TEST(MinePairsProperty, CompletenessAgainstBruteForce) {
    Rng rng(3);
    const std::size_t sizes[] = {10, 50, 200, 1000};
    for (auto n : sizes) {
        for (int t = 0; t < 3; ++t) {
            const auto rows = random_rows(rng, n);
            const double hours_tol = t == 0 ? 0.0 : 5.0;
            const double gain_tol = t == 2 ? 0.5 : 0.0;
            const auto ds = dataset_from(kSchema, to_csv(rows));
            const auto expect = brute_force(rows, 10, hours_tol, gain_tol);
            if (expect.empty()) continue;
            const auto result = mine_pairs(ds, spec_for(10, hours_tol, gain_tol, false));
            EXPECT_EQ(as_set(result.pairs), expect) << "n=" << n << " t=" << t;
            EXPECT_EQ(result.stats.eligible_pairs, expect.size());
            for (const auto& p : result.pairs.pairs) EXPECT_LT(p.i, p.j);
        }
    }
}

TEST(MinePairsProperty, PerConstraintCountsAgainstBruteForce) {
    Rng rng(4);
    const auto rows = random_rows(rng, 300);
    const auto ds = dataset_from(kSchema, to_csv(rows));
    const auto result = mine_pairs(ds, spec_for(10, 5, 0, false));
    std::map<std::string, std::uint64_t> expect;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            const auto &a = rows[i], &b = rows[j];
            expect["age"] += std::abs(a.age - b.age) >= 10;
            expect["job"] += a.job == b.job;
            expect["hours"] += std::abs(a.hours - b.hours) <= 5;
            expect["gain"] += a.gain == b.gain;
            expect["country"] += a.country != "?" && a.country == b.country;
        }
    }
    ASSERT_EQ(result.stats.constraints.size(), expect.size());
    for (const auto& c : result.stats.constraints) EXPECT_EQ(c.pairs_passing, expect[c.column]) << c.column;
}

TEST(MinePairsProperty, DisjointSoundMaximalAndDeterministic) {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const auto rows = random_rows(rng, 400);
        const auto ds = dataset_from(kSchema, to_csv(rows));
        const auto eligible = brute_force(rows, 10, 5, 0);
        if (eligible.empty()) continue;
        const auto spec = spec_for(10, 5, 0, true, rng.next());
        const auto result = mine_pairs(ds, spec);
        std::vector<int> used(rows.size(), 0);
        for (const auto& p : result.pairs.pairs) {
            EXPECT_TRUE(matches(rows[p.i], rows[p.j], 10, 5, 0));
            EXPECT_EQ(p.weight, 1.0);
            ++used[p.i];
            ++used[p.j];
        }
        for (int u : used) EXPECT_LE(u, 1);
        // Greedy matching leaves no eligible pair with both rows free.
        for (const auto& [i, j] : eligible) EXPECT_TRUE(used[i] || used[j]);
        EXPECT_EQ(mine_pairs(ds, spec).pairs, result.pairs);
    }
}

TEST(MinePairs, MaxPairsCapsTheCount) {
    Rng rng(6);
    const auto rows = random_rows(rng, 500);
    const auto ds = dataset_from(kSchema, to_csv(rows));
    auto spec = spec_for(10, 5, 0.5, false);
    spec.max_pairs = 7;
    const auto capped = mine_pairs(ds, spec);
    EXPECT_EQ(capped.pairs.size(), 7u);
    const auto full = as_set(mine_pairs(ds, spec_for(10, 5, 0.5, false)).pairs);
    for (const auto& p : capped.pairs.pairs) EXPECT_TRUE(full.count({p.i, p.j}));
}

TEST(MinePairs, NoMatchesReportsStatistics) {
    const std::vector<RawRow> rows{{25, "a", 40, 0, "us", 0, 1}, {30, "a", 40, 0, "us", 1, 0}};
    const auto ds = dataset_from(kSchema, to_csv(rows));
    try {
        mine_pairs(ds, spec_for(10, 0, 0, true));
        FAIL() << "expected EmptyResultError";
    } catch (const EmptyResultError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("age gap>=10: 0 pairs"), std::string::npos) << msg;
        EXPECT_NE(msg.find("job equal: 1 pairs"), std::string::npos) << msg;
    }
}

TEST(MatchSpecValidate, RejectsBadSpecs) {
    const auto schema = fixture::schema_from(kSchema);
    auto s = spec_for(10, 0, 0, true);
    EXPECT_NO_THROW(s.validate(schema));
    auto no_target = s;
    no_target.ignore_columns = {"id"};
    EXPECT_THROW(no_target.validate(schema), DataError);
    auto protected_exact = s;
    protected_exact.exact_match_columns = {"age"};
    EXPECT_THROW(protected_exact.validate(schema), DataError);
    auto unknown = s;
    unknown.ignore_columns.push_back("nope");
    EXPECT_THROW(unknown.validate(schema), DataError);
    auto categorical_tol = s;
    categorical_tol.numeric_tolerance["job"] = 1;
    EXPECT_THROW(categorical_tol.validate(schema), DataError);
}

TEST(MatchSpec, ConfigRoundTrip) {
    auto s = spec_for(10, 2.5, 0, true, 99);
    s.max_pairs = 12;
    s.exact_match_columns = {"job"};
    const auto back = MatchSpec::from_config(KvConfig::parse(s.to_config().serialize()));
    EXPECT_EQ(back.to_config().serialize(), s.to_config().serialize());
}

TEST(LoadPairs, ParsesWeights) {
    const auto p = parse_pairs("0,5,1.0\n2,7,0.5", 10);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p.pairs[0], (ConsistencyPair{0, 5, 1.0}));
    EXPECT_EQ(p.pairs[1], (ConsistencyPair{2, 7, 0.5}));
}

TEST(LoadPairs, HeaderAndDefaultWeight) {
    const auto p = parse_pairs("i,j,weight\n3,1\n", 10);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p.pairs[0].weight, 1.0);
}

TEST(LoadPairs, Errors) {
    EXPECT_THROW(parse_pairs("0,99\n", 10), DataError);
    EXPECT_THROW(parse_pairs("4,4\n", 10), DataError);
    EXPECT_THROW(parse_pairs("1,2,0\n", 10), DataError);
    EXPECT_THROW(parse_pairs("1,x\n", 10), DataError);
    EXPECT_THROW(parse_pairs("", 10), EmptyResultError);
}

TEST(LoadPairs, CsvRoundTrip) {
    const auto p = fixture::pairs_of({{0, 5, 1.0}, {2, 7, 0.25}});
    EXPECT_EQ(parse_pairs(pairs_to_csv(p), 10).pairs, p.pairs);
}

namespace {

PairSet numbered_pairs(std::size_t m) {
    PairSet p;
    for (std::size_t k = 0; k < m; ++k) p.pairs.push_back({2 * k, 2 * k + 1, 1.0});
    return p;
}

}  // namespace

TEST(SubsamplePairs, FullSampleIsIdentity) {
    const auto p = numbered_pairs(3062);
    EXPECT_EQ(subsample_pairs(p, 3062, 1).pairs, p.pairs);
}

TEST(SubsamplePairs, DeterministicSubsetInOriginalOrder) {
    const auto p = numbered_pairs(3062);
    const auto a = subsample_pairs(p, 100, 8);
    EXPECT_EQ(a, subsample_pairs(p, 100, 8));
    EXPECT_EQ(a.size(), 100u);
    for (std::size_t k = 1; k < a.size(); ++k) EXPECT_LT(a.pairs[k - 1].i, a.pairs[k].i);
}

TEST(SubsamplePairs, SubsetOfInput) {
    const auto p = numbered_pairs(10);
    const auto s = subsample_pairs(p, 4, 2);
    EXPECT_EQ(s.size(), 4u);
    const auto all = as_set(p);
    for (const auto& x : s.pairs) EXPECT_TRUE(all.count({x.i, x.j}));
    EXPECT_THROW(subsample_pairs(p, 11, 2), DataError);
}
