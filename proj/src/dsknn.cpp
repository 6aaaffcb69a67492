#include "fontpair/dsknn.hpp"

#include "fontpair/similarity.hpp"

#include <algorithm>

namespace fontpair {

namespace {

struct Term {
    double follower_sim;  // cos(y_j, y_l)
    const Candidate* cand;
    double idf;
};

bool term_before(const Term& a, const Term& b) {
    if (a.follower_sim != b.follower_sim) return a.follower_sim > b.follower_sim;
    if (a.cand->header_similarity != b.cand->header_similarity)
        return a.cand->header_similarity > b.cand->header_similarity;
    if (a.cand->source_header_id != b.cand->source_header_id)
        return a.cand->source_header_id < b.cand->source_header_id;
    return a.cand->follower_id < b.cand->follower_id;
}

// Takes instances in rank order, letting a candidate with multiplicity c
// fill up to c of the K2 slots.
double average_top_instances(std::vector<Term>& terms, size_t k2) {
    if (terms.empty()) throw Error("dsknn: empty candidate set");
    std::sort(terms.begin(), terms.end(), term_before);
    double sum = 0.0;
    long long used = 0;
    const auto budget = static_cast<long long>(k2);
    for (const auto& t : terms) {
        if (used == budget) break;
        long long take = std::min(t.cand->multiplicity, budget - used);
        sum += static_cast<double>(take) * t.follower_sim * t.cand->header_similarity * t.idf;
        used += take;
    }
    return sum / static_cast<double>(used);
}

Vector unit(const Vector& v) {
    double n = v.norm();
    if (n == 0.0) throw Error("dsknn: zero-norm feature vector");
    return v / n;
}

double unit_cos(const Vector& a, const Vector& b) { return std::clamp(a.dot(b), -1.0, 1.0); }

std::vector<Candidate> collect_candidates(const std::vector<Neighbor>& neighbors, const PairDataset& train) {
    std::vector<Candidate> out;
    for (const auto& nb : neighbors)
        for (const auto& fc : train.pairs_of(nb.font_id))
            out.push_back({fc.follower_id, nb.font_id, nb.score, fc.count});
    return out;
}

}  // namespace

void DsknnParams::validate() const {
    if (k1 < 1 || k2 < 1 || n < 1) throw Error("dsknn: K1, K2 and N must be at least 1");
}

std::vector<Candidate> candidate_bodies(const Vector& query_header, const PairDataset& train,
                                        const FeatureStore& header_features, size_t k1) {
    if (train.empty()) throw Error("dsknn: no training headers");
    if (k1 < 1) throw Error("dsknn: K1 must be at least 1");
    FeatureStore headers = header_features.subset(train.headers());
    return collect_candidates(knn(query_header, headers, k1), train);
}

double score_follower(const Vector& follower, const std::vector<Candidate>& candidates,
                      const FeatureStore& follower_features, size_t k2, const IdfTable* idf,
                      std::string_view follower_id) {
    if (k2 < 1) throw Error("dsknn: K2 must be at least 1");
    std::vector<Term> terms;
    terms.reserve(candidates.size());
    for (const auto& c : candidates) {
        // exactly 1 for the font itself, so structural ties stay ties
        double sim = c.follower_id == follower_id ? 1.0 : cosine(follower, follower_features.at(c.follower_id));
        terms.push_back({sim, &c, idf ? idf->weight(c.follower_id) : 1.0});
    }
    return average_top_instances(terms, k2);
}

Ranking dsknn_recommend(const Vector& query_header, const PairDataset& train, const FeatureStore& header_features,
                        const FeatureStore& follower_store, const DsknnParams& params) {
    params.validate();
    auto cands = candidate_bodies(query_header, train, header_features, params.k1);
    IdfTable idf;
    if (params.use_idf) idf = compute_idf(train);

    Ranking out;
    out.reserve(follower_store.size());
    for (size_t j = 0; j < follower_store.size(); ++j)
        out.push_back({follower_store.id(j),
                       score_follower(follower_store.vector(j), cands, follower_store, params.k2,
                                      params.use_idf ? &idf : nullptr, follower_store.id(j))});
    std::sort(out.begin(), out.end(), ranks_before);
    if (out.size() > params.n) out.resize(params.n);
    return out;
}

// ---------------------------------------------------------------- DsknnRecommender

DsknnRecommender::DsknnRecommender(PairDataset train, const FeatureStore& header_features,
                                   FeatureStore follower_store, DsknnParams params)
    : train_(std::move(train)), followers_(std::move(follower_store)), params_(params) {
    params_.validate();
    if (train_.empty()) throw Error("dsknn: no training headers");
    headers_ = header_features.subset(train_.headers());
    idf_ = params_.use_idf ? compute_idf(train_) : IdfTable::uniform(train_.followers());
    for (const auto& f : train_.followers()) followers_.at(f);  // every candidate must be scorable
    for (size_t j = 0; j < followers_.size(); ++j) units_.emplace(followers_.id(j), unit(followers_.vector(j)));
}

std::vector<Candidate> DsknnRecommender::candidates(const Vector& query_header) const {
    return collect_candidates(knn(query_header, headers_, params_.k1), train_);
}

std::vector<const Vector*> DsknnRecommender::candidate_units(const std::vector<Candidate>& cands) const {
    std::vector<const Vector*> out;
    out.reserve(cands.size());
    for (const auto& c : cands) out.push_back(&units_.at(c.follower_id));
    return out;
}

double DsknnRecommender::score_against(const Vector& unit_follower, std::string_view follower_id,
                                       const std::vector<Candidate>& cands,
                                       const std::vector<const Vector*>& cand_units) const {
    std::vector<Term> terms;
    terms.reserve(cands.size());
    for (size_t i = 0; i < cands.size(); ++i) {
        double sim = cands[i].follower_id == follower_id ? 1.0 : unit_cos(unit_follower, *cand_units[i]);
        terms.push_back({sim, &cands[i], idf_.weight(cands[i].follower_id)});
    }
    return average_top_instances(terms, params_.k2);
}

Ranking DsknnRecommender::recommend(const Vector& query_header, size_t n) const {
    auto cands = candidates(query_header);
    auto cand_units = candidate_units(cands);
    Ranking out;
    out.reserve(followers_.size());
    for (size_t j = 0; j < followers_.size(); ++j)
        out.push_back({followers_.id(j), score_against(units_.at(followers_.id(j)), followers_.id(j), cands, cand_units)});
    std::sort(out.begin(), out.end(), ranks_before);
    if (out.size() > n) out.resize(n);
    return out;
}

double DsknnRecommender::score(const Vector& query_header, const Vector& follower) const {
    auto cands = candidates(query_header);
    return score_against(unit(follower), {}, cands, candidate_units(cands));
}

double DsknnRecommender::score(const Vector& query_header, const std::string& follower_id) const {
    auto it = units_.find(follower_id);
    if (it == units_.end()) throw NotFoundError("unknown follower font '" + follower_id + "'");
    auto cands = candidates(query_header);
    return score_against(it->second, follower_id, cands, candidate_units(cands));
}

}  // namespace fontpair
