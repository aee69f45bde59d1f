#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "pairfair/csv.hpp"
#include "pairfair/data.hpp"
#include "pairfair/error.hpp"
#include "support/fixtures.hpp"

using namespace pairfair;
using pairfair::fixture::dataset_from;

namespace {

const char* kSchema =
    "target_positive_value = yes\n"
    "missing_values = ?\n"
    "column.age = numeric protected\n"
    "column.color = categorical feature\n"
    "column.size = numeric feature\n"
    "column.note = categorical ignored\n"
    "column.y = categorical target\n";

}  // namespace

TEST(LoadCsv, DropsRowsWithMissingModelledCells) {
    const auto ds = dataset_from(kSchema,
                                 "age,color,size,note,y\n"
                                 "30,red,1.5,a,yes\n"
                                 "40,?,2,b,no\n"
                                 "50,blue,3,c,no\n");
    EXPECT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds.diagnostics.dropped, 1u);
    EXPECT_EQ(ds.diagnostics.rows_read, 3u);
    EXPECT_EQ(ds.labels, (std::vector<std::uint8_t>{1, 0}));
}

TEST(LoadCsv, MissingInIgnoredColumnKeepsRow) {
    const auto ds = dataset_from(kSchema, "age,color,size,note,y\n30,red,1,?,yes\n");
    EXPECT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds.diagnostics.dropped, 0u);
}

TEST(LoadCsv, HeaderMismatchIsAnError) {
    EXPECT_THROW(dataset_from(kSchema, "age,colour,size,note,y\n30,red,1,a,yes\n"), DataError);
}

TEST(LoadCsv, BadNumberNamesTheLine) {
    try {
        dataset_from(kSchema, "age,color,size,note,y\n30,red,1,a,yes\n31,red,big,a,no\n");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(LoadCsv, MissingFileIsIoError) {
    EXPECT_THROW(load_csv("/nonexistent/file.csv", fixture::schema_from(kSchema)), IoError);
}

TEST(LoadCsv, NoUsableRowsIsAnError) {
    EXPECT_THROW(dataset_from(kSchema, "age,color,size,note,y\n?,red,1,a,yes\n"), DataError);
}

TEST(Encode, OneHotOfColorColumn) {
    const auto ds = dataset_from(
        "target_positive_value = 1\ncolumn.color = categorical feature\ncolumn.y = categorical target\n",
        "color,y\nred,1\nblue,0\nred,0\n");
    const auto enc = encode(ds);
    // Vocabulary is lexicographic: blue, red.
    EXPECT_EQ(enc.feature_names(), (std::vector<std::string>{"color=blue", "color=red"}));
    const std::vector<double> expect{0, 1, 1, 0, 0, 1};
    EXPECT_EQ(enc.matrix.data(), expect);
}

TEST(Encode, AllNumericIsPassThrough) {
    const auto ds = dataset_from(
        "target_positive_value = 1\ncolumn.a = numeric feature\ncolumn.b = numeric feature\n"
        "column.y = categorical target\n",
        "a,b,y\n1.5,-2,1\n0,1e3,0\n");
    const auto enc = encode(ds);
    EXPECT_EQ(enc.matrix.data(), (std::vector<double>{1.5, -2, 0, 1000}));
    EXPECT_EQ(enc.row_origin, (std::vector<std::size_t>{0, 1}));
}

TEST(Encode, ProtectedColumnFollowsSchemaSetting) {
    auto text = std::string(kSchema);
    const std::string rows = "age,color,size,note,y\n30,red,1,a,yes\n";
    EXPECT_EQ(encode(dataset_from(text, rows)).feature_names(),
              (std::vector<std::string>{"age", "color=red", "size"}));
    text += "keep_protected_in_model = false\n";
    EXPECT_EQ(encode(dataset_from(text, rows)).feature_names(), (std::vector<std::string>{"color=red", "size"}));
}

namespace {

// Random mixed-type dataset written out as CSV text.
std::string random_csv(Rng& rng, std::size_t rows) {
    const char* colors[] = {"red", "green", "blue", "amber"};
    std::string out = "age,color,size,note,y\n";
    for (std::size_t r = 0; r < rows; ++r) {
        out += std::to_string(18 + rng.below(60)) + ",";
        out += std::string(colors[rng.below(4)]) + ",";
        out += csv::format_double(static_cast<double>(rng.below(1000)) / 8.0) + ",";
        out += "n" + std::to_string(rng.below(3)) + ",";
        out += rng.below(2) ? "yes\n" : "no\n";
    }
    return out;
}

}  // namespace

TEST(EncodeProperty, RoundTripAndOneHotSums) {
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        const auto text = random_csv(rng, 50);
        const auto ds = dataset_from(kSchema, text);
        const auto enc = encode(ds);

        // Independent parse of the raw text.
        std::istringstream in(text);
        csv::Reader reader(in);
        std::vector<std::string> header, fields;
        std::size_t line = 0;
        reader.next(header, line);
        std::vector<std::vector<std::string>> raw;
        while (reader.next(fields, line)) raw.push_back(fields);
        ASSERT_EQ(raw.size(), enc.size());

        for (std::size_t r = 0; r < enc.size(); ++r) {
            const auto decoded = decode_row(enc, ds, r);
            ASSERT_EQ(decoded.size(), 3u);  // age, color, size
            for (const auto& [col, text_value] : decoded) {
                const auto& original = raw[enc.row_origin[r]][col];
                if (ds.schema.columns[col].kind == ColumnKind::numeric) {
                    EXPECT_EQ(std::stod(text_value), std::stod(original));
                } else {
                    EXPECT_EQ(text_value, original);
                }
            }
            double block = 0.0;
            for (std::size_t f = 0; f < enc.num_features(); ++f) {
                if (enc.columns[f].category) block += enc.matrix(r, f);
            }
            EXPECT_EQ(block, 1.0);
        }
    }
}

TEST(EncodedCsv, HeaderAndRowLayout) {
    const auto ds = dataset_from(kSchema, "age,color,size,note,y\n30,red,1.5,a,yes\n");
    EXPECT_EQ(encoded_to_csv(encode(ds)), "row_origin,label,age,color=red,size\n0,1,30,1,1.5\n");
}

namespace {

EncodedDataset indexed_rows(std::size_t n) {
    Matrix x(n, 1);
    std::vector<std::uint8_t> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        x(r, 0) = static_cast<double>(r);
        y[r] = r % 2;
    }
    return fixture::encoded_from(x, y);
}

// Original row index of every row in a partition (feature 0 holds it).
std::vector<std::size_t> origins(const EncodedDataset& part) {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < part.size(); ++r) out.push_back(static_cast<std::size_t>(part.matrix(r, 0)));
    return out;
}

}  // namespace

TEST(Split, ConnectedRowsStayTogether) {
    const auto enc = indexed_rows(10);
    const auto pairs = fixture::pairs_of({{0, 1}, {1, 2}});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto split = pair_aware_split(enc, pairs, 0.2, seed);
        const auto test = origins(split.test);
        const auto in_test = [&](std::size_t r) { return std::count(test.begin(), test.end(), r) > 0; };
        EXPECT_EQ(in_test(0), in_test(1));
        EXPECT_EQ(in_test(1), in_test(2));
        EXPECT_EQ(split.train.size() + split.test.size(), 10u);
    }
}

TEST(Split, PlainSplitHitsRatio) {
    const auto enc = indexed_rows(100);
    const auto split = pair_aware_split(enc, PairSet{}, 0.2, 3);
    EXPECT_NEAR(static_cast<double>(split.test.size()), 20.0, 2.0);
    std::set<std::size_t> all;
    for (auto r : origins(split.train)) all.insert(r);
    for (auto r : origins(split.test)) EXPECT_TRUE(all.insert(r).second);
    EXPECT_EQ(all.size(), 100u);
}

TEST(Split, Deterministic) {
    const auto enc = indexed_rows(60);
    const auto pairs = fixture::pairs_of({{0, 7}, {3, 4}, {9, 20}, {20, 31}});
    EXPECT_EQ(pair_aware_split(enc, pairs, 0.25, 9), pair_aware_split(enc, pairs, 0.25, 9));
}

TEST(Split, GiantComponentNamesItsSize) {
    const auto enc = indexed_rows(10);
    PairSet chain;
    for (std::size_t r = 0; r + 1 < 10; ++r) chain.pairs.push_back({r, r + 1});
    try {
        pair_aware_split(enc, chain, 0.2, 1);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("10 rows"), std::string::npos) << e.what();
    }
}

TEST(SplitProperty, PairIntegrityOnRandomGraphs) {
    Rng rng(21);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 100 + rng.below(200);
        const auto enc = indexed_rows(n);
        PairSet pairs;
        const auto m = rng.below(n / 3);
        for (std::size_t k = 0; k < m; ++k) {
            const auto i = rng.below(n), j = rng.below(n);
            if (i != j) pairs.pairs.push_back({i, j, 0.5 + static_cast<double>(rng.below(4))});
        }
        const auto split = pair_aware_split(enc, pairs, 0.2, rng.next());
        const auto train = origins(split.train), test = origins(split.test);
        EXPECT_EQ(train.size() + test.size(), n);
        EXPECT_EQ(split.train_pairs.size() + split.test_pairs.size(), pairs.size());
        std::vector<int> side(n, -1);
        for (auto r : train) side[r] = 0;
        for (auto r : test) side[r] = 1;
        for (const auto& p : pairs.pairs) EXPECT_EQ(side[p.i], side[p.j]);
        // Local indices resolve back to the same original rows.
        std::multiset<std::pair<std::size_t, std::size_t>> expect, got;
        for (const auto& p : pairs.pairs) expect.insert({p.i, p.j});
        for (const auto& p : split.train_pairs.pairs) got.insert({train[p.i], train[p.j]});
        for (const auto& p : split.test_pairs.pairs) got.insert({test[p.i], test[p.j]});
        EXPECT_EQ(got, expect);
        EXPECT_NEAR(static_cast<double>(test.size()) / static_cast<double>(n), 0.2, 0.02 + 1e-12);
    }
}

TEST(Adult, FiftyEightFeaturesAndPositiveShare) {
    const auto path = fixture::data_path("data/adult.csv");
    if (!std::filesystem::exists(path)) GTEST_SKIP() << "Adult data not present";
    const auto ds = load_csv(path, FeatureSchema::load(fixture::data_path("config/adult.schema")));
    EXPECT_LE(ds.size(), 32561u);
    const auto enc = encode(ds);
    EXPECT_EQ(enc.num_features(), 58u);
    const double positives = static_cast<double>(std::count(ds.labels.begin(), ds.labels.end(), 1));
    EXPECT_NEAR(positives / static_cast<double>(ds.size()), 0.26, 0.015);
}
