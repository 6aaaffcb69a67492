#pragma once

#include "fontpair/common.hpp"
#include "fontpair/dataset.hpp"
#include "fontpair/metric_learning.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace fontpair {

/// Top-N retrieval metrics for one query (or a macro-average of many).
///
/// weighted_precision divides the idf mass of the hits by N, so it can
/// exceed 1 when idf weights do; the other three stay in [0, 1].
struct TopNReport {
    size_t n = 0;
    double precision = 0.0;
    double recall = 0.0;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double hits = 0.0;  ///< |top-N ∩ ground truth| (averaged when macro-averaged)
};

struct EvalConfig {
    bool non_popular_filter = false;
    size_t popular_top_k = 50;
    size_t folds = 5;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.2;  ///< used by the single-list binary_eval

    void validate() const;
};

TopNReport topn_metrics(const std::vector<std::string>& recommended, const std::set<std::string>& ground_truth,
                        size_t n, const IdfTable& idf);

/// Produces a ranked follower list for a (possibly unseen) header.
using Recommender = std::function<Ranking(const std::string& header_id, const Vector& header, size_t n)>;

struct TopNEvaluation {
    std::vector<TopNReport> per_n;  ///< one macro-averaged report per requested N
    size_t headers_evaluated = 0;
    size_t headers_skipped = 0;  ///< test headers without features or ground truth
};

/// Recommends for every test header and scores against that header's
/// followers in `test`. IDF comes from `train` only. With
/// cfg.non_popular_filter, the top cfg.popular_top_k training followers are
/// removed from the ground truth first.
TopNEvaluation evaluate_topn(const Recommender& recommender, const PairDataset& test, const PairDataset& train,
                             const FeatureStore& features, const std::vector<size_t>& ns, const EvalConfig& cfg);

using PairScorer = std::function<double(const std::string& header_id, const std::string& follower_id)>;

/// Threshold with the best accuracy for the rule `score >= t -> +1`,
/// searched over midpoints of the sorted unique scores plus one cut below
/// and one above the range. Ties go to the smallest threshold.
double best_threshold(const std::vector<double>& scores, const std::vector<int>& labels);

struct ThresholdFit {
    double threshold = 0.0;
    double cv_accuracy = 0.0;
};

/// k-fold cross-validation: each fold's threshold is fitted on the other
/// folds and checked on the held-out fold. Returns the median fold threshold.
ThresholdFit select_threshold(const std::vector<double>& scores, const std::vector<int>& labels, size_t folds,
                              std::uint64_t seed);

struct BinaryResult {
    double accuracy = 0.0;
    double threshold = 0.0;
    double cv_accuracy = 0.0;
    size_t test_size = 0;
};

BinaryResult binary_eval(const PairScorer& scorer, const std::vector<LabeledPair>& train,
                         const std::vector<LabeledPair>& test, const EvalConfig& cfg);
/// Stratified seeded holdout of cfg.holdout_fraction, then as above.
BinaryResult binary_eval(const PairScorer& scorer, const std::vector<LabeledPair>& labeled, const EvalConfig& cfg);

struct GammaSelection {
    double gamma = 1.0;
    std::vector<double> cv_accuracy;  ///< one per grid value, pooled over folds
};

/// k-fold cross-validation of the ASML/SML regulariser: each fold trains on
/// the rest, fits a threshold on its own training scores and is scored on
/// the held-out pairs. Ties go to the larger gamma.
GammaSelection select_gamma(const std::vector<LabeledPair>& pairs, const FeatureStore& store, bool symmetric_G,
                            const TrainConfig& cfg, const std::vector<double>& grid, size_t folds, std::uint64_t seed);

/// One user-study item: header A with two candidate followers.
struct RatingComparison {
    std::string header_id;
    std::string follower_a;
    std::string follower_b;
    int preferred = 0;  ///< 0 = follower_a, 1 = follower_b
};

enum class Polarity { higher_is_better, lower_is_better };

/// Fraction of comparisons where the better-scored side matches the
/// preferred one; exact ties count one half.
double rating_prediction(const PairScorer& scorer, Polarity polarity, const std::vector<RatingComparison>& items);

/// `header<TAB>follower_a<TAB>follower_b<TAB>hits_a<TAB>hits_b`; items with
/// equal hits are dropped, as are items below `min_consistency` in
/// normalised difference.
std::vector<RatingComparison> load_rating_comparisons(std::istream& in, double min_consistency = 0.0);

/// The `top_k` most popular followers of `dataset`.
std::set<std::string> popular_followers(const PairDataset& dataset, size_t top_k);
/// Removes every pair whose follower is in `excluded`.
PairDataset filter_followers(const PairDataset& dataset, const std::set<std::string>& excluded);
/// filter_followers(dataset, popular_followers(dataset, top_k))
PairDataset filter_non_popular(const PairDataset& dataset, size_t top_k = 50);

}  // namespace fontpair
