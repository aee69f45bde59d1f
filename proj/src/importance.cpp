#include "pairfair/importance.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pairfair/csv.hpp"
#include "pairfair/error.hpp"
#include "pairfair/metrics.hpp"
#include "pairfair/parallel.hpp"
#include "pairfair/rng.hpp"

namespace pairfair {

ImportanceReport permutation_importance(const Classifier& model, const EncodedDataset& test, int n_repeats,
                                        std::uint64_t seed, unsigned threads) {
    if (n_repeats < 1) throw DataError(fmt::format("n_repeats must be >= 1, got {}", n_repeats));
    if (model.num_features() != test.num_features()) {
        throw DataError(fmt::format("model expects {} features, test data has {}", model.num_features(),
                                    test.num_features()));
    }
    if (test.size() == 0) throw DataError("permutation importance on an empty test set");

    auto score = [&](const Matrix& x) {
        return accuracy(Predictions::from_scores(model.predict_proba(x)), test.labels);
    };
    const double baseline = score(test.matrix);
    const std::size_t nf = test.num_features();

    std::vector<double> means(nf), stds(nf);
    parallel_for(nf, threads, [&](std::size_t f) {
        Rng rng = Rng::substream(seed, f);
        Matrix shuffled = test.matrix;
        const auto original = test.matrix.column(f);
        std::vector<double> col = original;
        std::vector<double> drops(static_cast<std::size_t>(n_repeats));
        for (auto& drop : drops) {
            col = original;
            rng.shuffle(col);
            for (std::size_t r = 0; r < col.size(); ++r) shuffled(r, f) = col[r];
            drop = baseline - score(shuffled);
        }
        double mean = 0.0;
        for (double d : drops) mean += d;
        mean /= static_cast<double>(drops.size());
        double var = 0.0;
        for (double d : drops) var += (d - mean) * (d - mean);
        means[f] = mean;
        stds[f] = std::sqrt(var / static_cast<double>(drops.size()));
    });

    std::vector<std::size_t> order(nf);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return means[a] > means[b]; });

    ImportanceReport report;
    report.baseline_accuracy = baseline;
    report.n_repeats = n_repeats;
    report.seed = seed;
    const auto names = test.feature_names();
    for (std::size_t k = 0; k < nf; ++k) {
        const auto f = order[k];
        report.entries.push_back({names[f], means[f], stds[f], static_cast<int>(k + 1)});
    }
    return report;
}

const ImportanceEntry& entry_of(const ImportanceReport& report, const std::string& feature) {
    for (const auto& e : report.entries) {
        if (e.feature == feature) return e;
    }
    throw DataError("feature '" + feature + "' not in importance report");
}

int rank_of(const ImportanceReport& report, const std::string& feature) { return entry_of(report, feature).rank; }

std::string importance_to_csv(const ImportanceReport& report) {
    std::string out = "feature,mean_drop,std,rank\n";
    for (const auto& e : report.entries) {
        out += fmt::format("{},{},{},{}\n", csv::escape(e.feature), csv::format_double(e.mean_drop),
                           csv::format_double(e.std), e.rank);
    }
    return out;
}

}  // namespace pairfair
