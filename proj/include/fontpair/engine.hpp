#pragma once

#include "fontpair/baselines.hpp"
#include "fontpair/common.hpp"
#include "fontpair/dataset.hpp"
#include "fontpair/dsknn.hpp"
#include "fontpair/metric_learning.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace fontpair {

inline constexpr int kSnapshotFormatVersion = 1;

/// Everything needed to answer queries. Immutable once handed to an Engine.
struct EngineSnapshot {
    std::string version = "1";      ///< free-form label of the data/model build
    FeatureStore headers;           ///< fonts that may be queried as headers
    FeatureStore followers;         ///< fonts that may be recommended
    PairDataset train;
    std::map<MetricVariant, MetricModel> models;
    DsknnParams dsknn;
    double consim_target = 0.5;
    std::uint64_t family_seed = 0;

    /// Throws if a training pair or model dimension does not resolve.
    void validate() const;
};

/// Writes the snapshot with a CRC-32 over its body.
void save_snapshot(std::ostream& out, const EngineSnapshot& snapshot);
/// Throws on format-version mismatch, truncation or checksum failure.
EngineSnapshot load_snapshot(std::istream& in);
void save_snapshot_file(const std::string& path, const EngineSnapshot& snapshot);
EngineSnapshot load_snapshot_file(const std::string& path);

/// Answers recommendation and scoring queries for every method name:
/// dsknn, asml, sml, ml, popularity, sknn, family, consim.
class Engine {
public:
    explicit Engine(EngineSnapshot snapshot);

    const EngineSnapshot& snapshot() const { return snap_; }

    static const std::vector<std::string>& method_names();
    /// Methods answerable with this snapshot (learned ones need a model).
    std::vector<std::string> available_methods() const;

    /// Throws NotFoundError for an unknown header, InvalidArgumentError for
    /// an unknown or unavailable method.
    Ranking recommend(const std::string& header_id, const std::string& method, size_t n) const;
    double score(const std::string& header_id, const std::string& follower_id, const std::string& method) const;

private:
    const Vector& header_vector(const std::string& id) const;
    const MetricModel& model_for(const std::string& method) const;

    EngineSnapshot snap_;
    std::unique_ptr<DsknnRecommender> dsknn_;
    std::map<std::string, long long> popularity_;
    ConsimScorer consim_;
};

}  // namespace fontpair
