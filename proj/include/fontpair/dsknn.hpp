#pragma once

#include "fontpair/common.hpp"
#include "fontpair/dataset.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace fontpair {

/// Dual-space k-NN recommendation.
///
/// The K1 training headers most similar to the query contribute their
/// follower lists as candidates. Every follower y_j is then scored by its
/// K2 most similar candidate instances:
///
///   S(y_j) = 1/K2 * sum_l cos(y_j, y_l) * cos(x_q, x_l) [* idf(y_l)]
///
/// where x_l is the training header the candidate y_l came from.
struct DsknnParams {
    size_t k1 = 10;
    size_t k2 = 5;
    bool use_idf = false;
    size_t n = 10;

    void validate() const;
};

struct Candidate {
    std::string follower_id;
    std::string source_header_id;
    double header_similarity = 0.0;  ///< cos(x_q, x_l)
    long long multiplicity = 1;
};

/// Union of the pair lists of the K1 nearest training headers, with
/// multiplicities. `header_features` must cover every training header.
std::vector<Candidate> candidate_bodies(const Vector& query_header, const PairDataset& train,
                                        const FeatureStore& header_features, size_t k1);

/// Scores one follower against a candidate multiset. Candidate instances
/// are ranked by cos(y_j, y_l) and then by header similarity; when fewer
/// than K2 instances exist the average is taken over those present.
/// Candidates named `follower_id` count as cosine exactly 1.
double score_follower(const Vector& follower, const std::vector<Candidate>& candidates,
                      const FeatureStore& follower_features, size_t k2, const IdfTable* idf = nullptr,
                      std::string_view follower_id = {});

/// Scores every font of `follower_store` and returns the top params.n.
/// `follower_store` must also hold every training follower.
Ranking dsknn_recommend(const Vector& query_header, const PairDataset& train, const FeatureStore& header_features,
                        const FeatureStore& follower_store, const DsknnParams& params);

/// Reusable recommender over a fixed training set; caches the training
/// header index, idf table and normalised follower vectors. Training
/// headers must resolve in `header_features` and training followers in
/// `follower_store`.
class DsknnRecommender {
public:
    DsknnRecommender(PairDataset train, const FeatureStore& header_features, FeatureStore follower_store,
                     DsknnParams params);

    const DsknnParams& params() const { return params_; }
    const PairDataset& train() const { return train_; }
    const IdfTable& idf() const { return idf_; }
    const FeatureStore& follower_store() const { return followers_; }

    std::vector<Candidate> candidates(const Vector& query_header) const;
    Ranking recommend(const Vector& query_header, size_t n) const;
    double score(const Vector& query_header, const Vector& follower) const;
    /// Same as recommend() reports for a follower in the store.
    double score(const Vector& query_header, const std::string& follower_id) const;

private:
    double score_against(const Vector& unit_follower, std::string_view follower_id, const std::vector<Candidate>& cands,
                         const std::vector<const Vector*>& cand_units) const;
    std::vector<const Vector*> candidate_units(const std::vector<Candidate>& cands) const;

    PairDataset train_;
    FeatureStore headers_;
    FeatureStore followers_;
    DsknnParams params_;
    IdfTable idf_;
    std::unordered_map<std::string, Vector> units_;  // normalised follower vectors
};

}  // namespace fontpair
