#include "fontpair/similarity.hpp"

#include <algorithm>
#include <numeric>

namespace fontpair {

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw Error("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw Error("cosine: zero-norm vector");
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

std::vector<Neighbor> knn(const Vector& query, const FeatureStore& store, size_t k,
                          const std::set<std::string>& exclude) {
    if (k == 0) throw Error("knn: k must be positive");
    if (store.size() > 0 && static_cast<size_t>(query.size()) != store.dim())
        throw Error("knn: query dimension " + std::to_string(query.size()) + " does not match store dimension " +
                    std::to_string(store.dim()));
    const double qn = query.norm();
    if (qn == 0.0) throw Error("knn: zero-norm query");

    std::vector<Neighbor> all;
    all.reserve(store.size());
    for (size_t i = 0; i < store.size(); ++i) {
        if (exclude.count(store.id(i))) continue;
        double c = std::clamp(query.dot(store.vector(i)) / (qn * store.norm(i)), -1.0, 1.0);
        all.push_back({store.id(i), c});
    }
    if (all.empty()) throw Error("knn: empty store");

    auto before = [](const Neighbor& a, const Neighbor& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.font_id < b.font_id;
    };
    const size_t take = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<long>(take), all.end(), before);
    all.resize(take);
    return all;
}

}  // namespace fontpair
