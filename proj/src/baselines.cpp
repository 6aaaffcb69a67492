#include "fontpair/baselines.hpp"

#include "fontpair/similarity.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <random>

namespace fontpair {

Ranking popularity_recommend(const PairDataset& train, size_t n) {
    if (train.empty()) throw Error("popularity: empty training set");
    Ranking out;
    for (const auto& [id, count] : popularity_ranking(train)) {
        if (out.size() == n) break;
        out.push_back({id, static_cast<double>(count)});
    }
    return out;
}

Ranking sknn_recommend(const Vector& query_header, const FeatureStore& follower_store, size_t n) {
    Ranking out;
    for (auto& nb : knn(query_header, follower_store, n)) out.push_back({std::move(nb.font_id), nb.score});
    return out;
}

namespace {

// Longest entries first so "Condensed" wins over "Cond".
constexpr std::array<std::string_view, 15> kStyleSuffixes = {
    "extrabold", "semibold", "condensed", "oblique", "regular", "italic", "medium", "black",
    "heavy",     "light",    "thin",      "bold",    "cond",    "book",   "mt"};

bool ends_with_icase(std::string_view s, std::string_view suffix) {
    if (s.size() < suffix.size()) return false;
    auto tail = s.substr(s.size() - suffix.size());
    for (size_t i = 0; i < suffix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(tail[i])) != suffix[i]) return false;
    return true;
}

}  // namespace

std::string family_name(std::string_view font_id) {
    std::string_view family = trim(font_id);
    if (auto dash = family.find('-'); dash != std::string_view::npos && dash > 0) family = family.substr(0, dash);
    bool stripped = true;
    while (stripped) {
        stripped = false;
        for (auto suffix : kStyleSuffixes) {
            // only at a camel-case boundary, and never down to nothing
            if (family.size() > suffix.size() && ends_with_icase(family, suffix)) {
                char first = family[family.size() - suffix.size()];
                if (!std::isupper(static_cast<unsigned char>(first))) continue;
                family.remove_suffix(suffix.size());
                stripped = true;
                break;
            }
        }
    }
    return std::string(family);
}

Ranking same_family_recommend(const std::string& query_header_id, const FeatureStore& follower_store, size_t n,
                              std::uint64_t seed) {
    const std::string family = family_name(query_header_id);
    std::vector<std::string> matches;
    for (const auto& id : follower_store.ids())
        if (family_name(id) == family) matches.push_back(id);
    std::sort(matches.begin(), matches.end());
    std::mt19937_64 rng(seed);
    std::shuffle(matches.begin(), matches.end(), rng);
    if (matches.size() > n) matches.resize(n);
    Ranking out;
    for (auto& id : matches) out.push_back({std::move(id), 1.0});
    return out;
}

ConsimScorer ConsimScorer::stand_in(double contrast_target) {
    ConsimScorer s;
    s.target_ = contrast_target;
    return s;
}

double ConsimScorer::score(const Vector& header, const Vector& follower) const {
    if (hook_) return hook_(header, follower);
    if (target_) return -std::abs(cosine(header, follower) - *target_);
    throw Error("consim: no scoring plugin registered and the stand-in is disabled");
}

double consim_score(const Vector& header, const Vector& follower, const ConsimScorer& plugin) {
    return plugin.score(header, follower);
}

Ranking consim_recommend(const Vector& query_header, const FeatureStore& follower_store, size_t n,
                         const ConsimScorer& plugin) {
    Ranking out;
    out.reserve(follower_store.size());
    for (size_t j = 0; j < follower_store.size(); ++j)
        out.push_back({follower_store.id(j), plugin.score(query_header, follower_store.vector(j))});
    std::sort(out.begin(), out.end(), ranks_before);
    if (out.size() > n) out.resize(n);
    return out;
}

}  // namespace fontpair
