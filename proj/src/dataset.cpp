#include "fontpair/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <unordered_set>

namespace fontpair {

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open '" + path + "'");
    return in;
}

bool skip_line(std::string_view line) {
    line = trim(line);
    return line.empty() || line.front() == '#';
}

}  // namespace

// ---------------------------------------------------------------- FeatureStore

void FeatureStore::insert(std::string font_id, Vector vec) {
    if (font_id.empty()) throw ParseError("empty font id");
    if (index_.count(font_id)) throw ParseError("duplicate font id '" + font_id + "'");
    if (vec.size() == 0) throw ParseError("empty feature vector for '" + font_id + "'");
    if (dim_ == 0) {
        dim_ = static_cast<size_t>(vec.size());
    } else if (static_cast<size_t>(vec.size()) != dim_) {
        throw ParseError("dimension mismatch for '" + font_id + "': expected " + std::to_string(dim_) +
                         ", got " + std::to_string(vec.size()));
    }
    if (!vec.allFinite()) throw ParseError("non-finite feature entry for '" + font_id + "'");
    double n = vec.norm();
    if (n == 0.0) throw ParseError("zero feature vector for '" + font_id + "'");

    index_.emplace(font_id, ids_.size());
    ids_.push_back(std::move(font_id));
    vectors_.push_back(std::move(vec));
    norms_.push_back(n);
}

const Vector* FeatureStore::find(const std::string& font_id) const {
    auto it = index_.find(font_id);
    return it == index_.end() ? nullptr : &vectors_[it->second];
}

const Vector& FeatureStore::at(const std::string& font_id) const {
    const Vector* v = find(font_id);
    if (!v) throw NotFoundError("unknown font '" + font_id + "'");
    return *v;
}

FeatureStore FeatureStore::subset(const std::vector<std::string>& font_ids) const {
    FeatureStore out;
    for (const auto& id : font_ids) out.insert(id, at(id));
    return out;
}

FeatureStore load_features(std::istream& in) {
    FeatureStore store;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skip_line(line)) continue;
        std::string_view view = line;
        if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
        auto fields = split(view, '\t');
        if (fields.size() != 2)
            throw ParseError("line " + std::to_string(lineno) + ": expected 'font_id<TAB>values'");
        auto values = split(fields[1], ',');
        Vector vec(static_cast<Eigen::Index>(values.size()));
        std::string id(trim(fields[0]));
        try {
            for (size_t i = 0; i < values.size(); ++i) vec(static_cast<Eigen::Index>(i)) = parse_double(values[i]);
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(lineno) + " ('" + id + "'): " + e.what());
        }
        store.insert(std::move(id), std::move(vec));
    }
    return store;
}

FeatureStore load_features_file(const std::string& path) {
    auto in = open_input(path);
    return load_features(in);
}

void save_features(std::ostream& out, const FeatureStore& store) {
    for (size_t i = 0; i < store.size(); ++i) {
        out << store.id(i) << '\t';
        const Vector& v = store.vector(i);
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            if (k) out << ',';
            out << format_double(v(k));
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------- PairDataset

std::string to_string(PairRole role) {
    return role == PairRole::header_body ? "header_body" : "header_subheader";
}

PairRole parse_pair_role(std::string_view text) {
    if (text == "header_body" || text == "body") return PairRole::header_body;
    if (text == "header_subheader" || text == "subheader") return PairRole::header_subheader;
    throw ParseError("unknown pair role '" + std::string(text) + "'");
}

PairDataset::PairDataset(PairRole role, std::vector<PairRecord> records) : role_(role) {
    std::map<std::pair<std::string, std::string>, long long> merged;
    for (auto& r : records) {
        if (r.count < 1)
            throw ParseError("pair (" + r.header_id + ", " + r.follower_id + ") has count < 1");
        if (r.header_id.empty() || r.follower_id.empty()) throw ParseError("pair with empty font id");
        merged[{std::move(r.header_id), std::move(r.follower_id)}] += r.count;
    }
    std::set<std::string> followers;
    records_.reserve(merged.size());
    for (auto& [key, count] : merged) {
        records_.push_back({key.first, key.second, count});
        by_header_[key.first].push_back({key.second, count});
        followers.insert(key.second);
        total_ += count;
    }
    for (const auto& [h, _] : by_header_) headers_.push_back(h);
    followers_.assign(followers.begin(), followers.end());
}

const std::vector<FollowerCount>& PairDataset::pairs_of(const std::string& header_id) const {
    static const std::vector<FollowerCount> none;
    auto it = by_header_.find(header_id);
    return it == by_header_.end() ? none : it->second;
}

PairDataset PairDataset::restrict_to(const FeatureStore& store) const {
    return filter([&](const PairRecord& r) { return store.contains(r.header_id) && store.contains(r.follower_id); });
}

PairDataset load_pairs(std::istream& in, PairRole role) {
    std::vector<PairRecord> records;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skip_line(line)) continue;
        auto fields = split(trim(line), '\t');
        if (fields.size() < 2 || fields.size() > 3)
            throw ParseError("line " + std::to_string(lineno) + ": expected 'header<TAB>follower[<TAB>count]'");
        PairRecord r{std::string(trim(fields[0])), std::string(trim(fields[1])), 1};
        if (fields.size() == 3) r.count = parse_int(fields[2]);
        if (r.count < 1) throw ParseError("line " + std::to_string(lineno) + ": count must be >= 1");
        records.push_back(std::move(r));
    }
    return PairDataset(role, std::move(records));
}

PairDataset load_pairs_file(const std::string& path, PairRole role) {
    auto in = open_input(path);
    return load_pairs(in, role);
}

void save_pairs(std::ostream& out, const PairDataset& dataset) {
    for (const auto& r : dataset.records()) out << r.header_id << '\t' << r.follower_id << '\t' << r.count << '\n';
}

void save_labeled(std::ostream& out, const std::vector<LabeledPair>& pairs) {
    for (const auto& p : pairs)
        out << p.header_id << '\t' << p.follower_id << '\t' << p.count << '\t' << (p.label > 0 ? "1" : "-1") << '\n';
}

std::vector<LabeledPair> load_labeled(std::istream& in) {
    std::vector<LabeledPair> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skip_line(line)) continue;
        auto fields = split(trim(line), '\t');
        if (fields.size() != 4)
            throw ParseError("line " + std::to_string(lineno) + ": expected 'header<TAB>follower<TAB>count<TAB>label'");
        LabeledPair p{std::string(trim(fields[0])), std::string(trim(fields[1])), 1, 1};
        p.count = parse_int(fields[2]);
        long long label = parse_int(fields[3]);
        if (label != 1 && label != -1) throw ParseError("line " + std::to_string(lineno) + ": label must be 1 or -1");
        p.label = static_cast<int>(label);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<LabeledPair> load_labeled_file(const std::string& path) {
    auto in = open_input(path);
    return load_labeled(in);
}

// ---------------------------------------------------------------- splitting and sampling

DatasetSplit split_by_header(const PairDataset& dataset, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error("split ratio must lie in (0, 1)");
    const size_t m = dataset.num_headers();
    if (m < 2) throw Error("cannot split a dataset with fewer than two unique headers");

    std::vector<std::string> headers = dataset.headers();
    std::mt19937_64 rng(seed);
    std::shuffle(headers.begin(), headers.end(), rng);

    auto n_train = static_cast<size_t>(std::llround(ratio * static_cast<double>(m)));
    n_train = std::clamp<size_t>(n_train, 1, m - 1);
    std::unordered_set<std::string> train_headers(headers.begin(), headers.begin() + static_cast<long>(n_train));

    std::vector<PairRecord> train, test;
    for (const auto& r : dataset.records()) (train_headers.count(r.header_id) ? train : test).push_back(r);
    return {PairDataset(dataset.role(), std::move(train)), PairDataset(dataset.role(), std::move(test))};
}

std::vector<LabeledPair> sample_negatives(const PairDataset& dataset, std::uint64_t seed) {
    const auto& headers = dataset.headers();
    const auto& followers = dataset.followers();
    const std::uint64_t n_f = followers.size();
    const std::uint64_t grid = headers.size() * n_f;
    const std::uint64_t n_pos = dataset.records().size();

    std::unordered_map<std::string, std::uint64_t> follower_index;
    for (std::uint64_t j = 0; j < n_f; ++j) follower_index.emplace(followers[j], j);

    std::vector<LabeledPair> out;
    out.reserve(2 * n_pos);
    std::unordered_set<std::uint64_t> positive;
    {
        // records are sorted by header, so the header index advances monotonically
        std::uint64_t hi = 0;
        for (const auto& r : dataset.records()) {
            while (headers[hi] != r.header_id) ++hi;
            positive.insert(hi * n_f + follower_index.at(r.follower_id));
            out.push_back({r.header_id, r.follower_id, 1, r.count});
        }
    }
    if (grid - n_pos < n_pos)
        throw Error("positive pairs saturate the header x follower space: " + std::to_string(n_pos) +
                    " positives, only " + std::to_string(grid - n_pos) + " free combinations");

    std::mt19937_64 rng(seed);
    auto emit = [&](std::uint64_t cell) {
        out.push_back({headers[cell / n_f], followers[cell % n_f], -1, 1});
    };

    constexpr std::uint64_t kEnumerateLimit = 4'000'000;
    if (grid <= kEnumerateLimit) {
        std::vector<std::uint64_t> free_cells;
        free_cells.reserve(grid - n_pos);
        for (std::uint64_t c = 0; c < grid; ++c)
            if (!positive.count(c)) free_cells.push_back(c);
        std::vector<std::uint64_t> picked;
        picked.reserve(n_pos);
        std::sample(free_cells.begin(), free_cells.end(), std::back_inserter(picked), n_pos, rng);
        for (auto c : picked) emit(c);
    } else {
        std::uniform_int_distribution<std::uint64_t> cell_dist(0, grid - 1);
        std::unordered_set<std::uint64_t> taken;
        while (taken.size() < n_pos) {
            std::uint64_t c = cell_dist(rng);
            if (positive.count(c) || !taken.insert(c).second) continue;
            emit(c);
        }
    }
    return out;
}

// ---------------------------------------------------------------- idf and popularity

IdfTable::IdfTable(const PairDataset& dataset) {
    if (dataset.empty()) throw Error("cannot compute idf over an empty dataset");
    m_ = static_cast<double>(dataset.num_headers());
    unseen_ = m_;
    std::map<std::string, long long> distinct_headers;
    for (const auto& r : dataset.records()) ++distinct_headers[r.follower_id];  // records are unique per pair
    for (const auto& [f, t] : distinct_headers) weights_.emplace(f, m_ / static_cast<double>(t));
}

std::optional<double> IdfTable::find(const std::string& follower_id) const {
    auto it = weights_.find(follower_id);
    if (it == weights_.end()) return std::nullopt;
    return it->second;
}

double IdfTable::weight(const std::string& follower_id) const {
    auto w = find(follower_id);
    return w ? *w : unseen_;
}

IdfTable IdfTable::uniform(const std::vector<std::string>& follower_ids) {
    IdfTable t;
    t.m_ = 1.0;
    t.unseen_ = 1.0;
    for (const auto& id : follower_ids) t.weights_.emplace(id, 1.0);
    return t;
}

IdfTable compute_idf(const PairDataset& dataset) { return IdfTable(dataset); }

std::map<std::string, long long> popularity_counts(const PairDataset& dataset) {
    std::map<std::string, long long> counts;
    for (const auto& r : dataset.records()) counts[r.follower_id] += r.count;
    return counts;
}

std::vector<std::pair<std::string, long long>> popularity_ranking(const PairDataset& dataset) {
    auto counts = popularity_counts(dataset);
    std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranked;
}

}  // namespace fontpair
