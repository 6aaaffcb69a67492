#pragma once

#include "fontpair/common.hpp"
#include "fontpair/dataset.hpp"

#include <set>
#include <string>
#include <vector>

namespace fontpair {

struct Neighbor {
    std::string font_id;
    double score = 0.0;  ///< cosine similarity in [-1, 1]

    bool operator==(const Neighbor&) const = default;
};

/// a.b / (|a||b|), clamped to [-1, 1]. Throws on zero norm or dimension mismatch.
double cosine(const Vector& a, const Vector& b);

/// Exact top-k neighbours of `query` by cosine, descending, ties by font id.
/// Fonts listed in `exclude` are skipped. Returns min(k, candidates) entries.
std::vector<Neighbor> knn(const Vector& query, const FeatureStore& store, size_t k,
                          const std::set<std::string>& exclude = {});

}  // namespace fontpair
