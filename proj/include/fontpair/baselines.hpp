#pragma once

#include "fontpair/common.hpp"
#include "fontpair/dataset.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace fontpair {

/// Query-independent: the N most frequent followers in `train`, scored by count.
Ranking popularity_recommend(const PairDataset& train, size_t n);

/// The N followers most visually similar (cosine) to the query header.
Ranking sknn_recommend(const Vector& query_header, const FeatureStore& follower_store, size_t n);

/// Family part of a PostScript-style name: the text before the first hyphen,
/// with trailing style words (Bold, Italic, ...) stripped case-insensitively.
/// "Helvetica-Bold" -> "Helvetica", "TimesNewRomanBoldItalic" -> "TimesNewRoman".
std::string family_name(std::string_view font_id);

/// Up to N followers sharing the query's family, sampled uniformly under `seed`.
/// Each is scored 1.0.
Ranking same_family_recommend(const std::string& query_header_id, const FeatureStore& follower_store, size_t n,
                              std::uint64_t seed);

using PairScoreHook = std::function<double(const Vector& header, const Vector& follower)>;

/// Plug-in point for the contrast-similarity baseline. No reference
/// formula ships with the library; the built-in hook is a labelled
/// stand-in scoring -|cos(x, y) - target|.
class ConsimScorer {
public:
    /// Scorer using the built-in stand-in with the given contrast target.
    static ConsimScorer stand_in(double contrast_target = 0.5);
    /// Scorer with neither a plugin nor the stand-in; score() throws.
    static ConsimScorer disabled() { return ConsimScorer(); }

    void register_hook(PairScoreHook hook) { hook_ = std::move(hook); }
    bool has_hook() const { return static_cast<bool>(hook_); }
    bool stand_in_enabled() const { return target_.has_value(); }
    double contrast_target() const { return target_.value_or(0.5); }

    double score(const Vector& header, const Vector& follower) const;

private:
    PairScoreHook hook_;
    std::optional<double> target_;
};

double consim_score(const Vector& header, const Vector& follower, const ConsimScorer& plugin);

Ranking consim_recommend(const Vector& query_header, const FeatureStore& follower_store, size_t n,
                         const ConsimScorer& plugin);

}  // namespace fontpair
