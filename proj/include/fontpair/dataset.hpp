#pragma once

#include "fontpair/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fontpair {

/// Indexed collection of named font feature vectors sharing one dimension.
///
/// The dimension is fixed by the first insert. Vectors must be finite and
/// non-zero, since cosine similarity is undefined for the zero vector.
/// A store is populated once and then only read.
class FeatureStore {
public:
    FeatureStore() = default;

    void insert(std::string font_id, Vector vec);

    size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }
    /// 0 until the first vector is inserted.
    size_t dim() const { return dim_; }

    bool contains(const std::string& font_id) const { return index_.count(font_id) != 0; }
    const Vector* find(const std::string& font_id) const;
    /// Throws NotFoundError.
    const Vector& at(const std::string& font_id) const;

    const std::vector<std::string>& ids() const { return ids_; }
    const std::string& id(size_t i) const { return ids_[i]; }
    const Vector& vector(size_t i) const { return vectors_[i]; }
    double norm(size_t i) const { return norms_[i]; }

    /// Store restricted to `font_ids`, in the given order. Unknown ids throw.
    FeatureStore subset(const std::vector<std::string>& font_ids) const;

private:
    size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<Vector> vectors_;
    std::vector<double> norms_;
    std::unordered_map<std::string, size_t> index_;
};

/// Parses `font_id<TAB>v1,v2,...,vD` lines; `#` lines and blank lines are skipped.
FeatureStore load_features(std::istream& in);
FeatureStore load_features_file(const std::string& path);
void save_features(std::ostream& out, const FeatureStore& store);

enum class PairRole { header_body, header_subheader };

std::string to_string(PairRole role);
PairRole parse_pair_role(std::string_view text);

struct PairRecord {
    std::string header_id;
    std::string follower_id;
    long long count = 1;

    bool operator==(const PairRecord&) const = default;
};

struct FollowerCount {
    std::string follower_id;
    long long count = 1;
};

/// Multiset of (header, follower) pairings. Identical pairs are merged by
/// summing their counts; records are kept sorted by (header, follower).
class PairDataset {
public:
    PairDataset() = default;
    PairDataset(PairRole role, std::vector<PairRecord> records);

    PairRole role() const { return role_; }
    const std::vector<PairRecord>& records() const { return records_; }
    bool empty() const { return records_.empty(); }

    /// Sorted unique header ids (m of them).
    const std::vector<std::string>& headers() const { return headers_; }
    /// Sorted unique follower ids (n of them).
    const std::vector<std::string>& followers() const { return followers_; }
    size_t num_headers() const { return headers_.size(); }
    size_t num_followers() const { return followers_.size(); }
    long long total_count() const { return total_; }

    bool has_header(const std::string& header_id) const { return by_header_.count(header_id) != 0; }
    /// The header's pair list P_i with multiplicities; empty if unknown.
    const std::vector<FollowerCount>& pairs_of(const std::string& header_id) const;

    template <class Pred>
    PairDataset filter(Pred keep) const {
        std::vector<PairRecord> kept;
        for (const auto& r : records_)
            if (keep(r)) kept.push_back(r);
        return PairDataset(role_, std::move(kept));
    }

    /// Drops every record whose header or follower has no features.
    PairDataset restrict_to(const FeatureStore& store) const;

    bool operator==(const PairDataset& o) const { return role_ == o.role_ && records_ == o.records_; }

private:
    PairRole role_ = PairRole::header_body;
    std::vector<PairRecord> records_;
    std::vector<std::string> headers_;
    std::vector<std::string> followers_;
    std::map<std::string, std::vector<FollowerCount>> by_header_;
    long long total_ = 0;
};

/// Parses `header<TAB>follower[<TAB>count]` lines.
PairDataset load_pairs(std::istream& in, PairRole role = PairRole::header_body);
PairDataset load_pairs_file(const std::string& path, PairRole role = PairRole::header_body);
void save_pairs(std::ostream& out, const PairDataset& dataset);

struct LabeledPair {
    std::string header_id;
    std::string follower_id;
    int label = 1;  ///< +1 positive, -1 negative
    long long count = 1;  ///< multiplicity of a positive record; 1 for negatives

    bool operator==(const LabeledPair&) const = default;
};

/// Pair-file format with a trailing label column: `header<TAB>follower<TAB>count<TAB>label`.
void save_labeled(std::ostream& out, const std::vector<LabeledPair>& pairs);
std::vector<LabeledPair> load_labeled(std::istream& in);
std::vector<LabeledPair> load_labeled_file(const std::string& path);

struct DatasetSplit {
    PairDataset train;
    PairDataset test;
};

/// Partitions unique headers into train/test with round(ratio * m) train
/// headers (at least one on each side). Each record follows its header.
DatasetSplit split_by_header(const PairDataset& dataset, double ratio, std::uint64_t seed);

/// Every unique positive record (label +1) followed by the same number of
/// negatives drawn without replacement from headers x followers minus positives.
std::vector<LabeledPair> sample_negatives(const PairDataset& dataset, std::uint64_t seed);

/// idf(y) = m / t_y, where t_y counts distinct headers paired with y.
class IdfTable {
public:
    IdfTable() = default;
    explicit IdfTable(const PairDataset& dataset);

    /// Number of unique headers the table was computed from.
    double header_count() const { return m_; }
    std::optional<double> find(const std::string& follower_id) const;
    /// Falls back to `unseen_weight()` for followers absent from the data.
    double weight(const std::string& follower_id) const;

    double unseen_weight() const { return unseen_; }
    void set_unseen_weight(double w) { unseen_ = w; }

    const std::map<std::string, double>& weights() const { return weights_; }

    /// Table with every weight equal to one.
    static IdfTable uniform(const std::vector<std::string>& follower_ids);

private:
    double m_ = 0.0;
    double unseen_ = 0.0;
    std::map<std::string, double> weights_;
};

IdfTable compute_idf(const PairDataset& dataset);

/// Count-weighted number of pairings per follower.
std::map<std::string, long long> popularity_counts(const PairDataset& dataset);

/// Followers sorted by popularity descending, ties by id ascending.
std::vector<std::pair<std::string, long long>> popularity_ranking(const PairDataset& dataset);

}  // namespace fontpair
