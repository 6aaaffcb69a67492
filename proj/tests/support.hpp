#pragma once

// Fixtures and independent reference implementations shared by the unit
// and acceptance tests. Nothing here calls into the library code it checks.

#include "fontpair/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace fixtures {

using fontpair::FeatureStore;
using fontpair::LabeledPair;
using fontpair::Matrix;
using fontpair::PairDataset;
using fontpair::PairRecord;
using fontpair::Vector;

inline Vector gaussian_vector(std::mt19937_64& rng, size_t dim, double sd = 1.0) {
    std::normal_distribution<double> nd(0.0, sd);
    Vector v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = nd(rng);
    return v;
}

inline FeatureStore random_store(std::mt19937_64& rng, const std::string& prefix, size_t count, size_t dim) {
    FeatureStore s;
    for (size_t i = 0; i < count; ++i) {
        Vector v = gaussian_vector(rng, dim);
        if (v.norm() == 0.0) v(0) = 1.0;
        s.insert(prefix + std::to_string(i), v);
    }
    return s;
}

/// Random (header, follower, count) records with every header used at least once.
inline PairDataset random_pairs(std::mt19937_64& rng, const FeatureStore& headers, const FeatureStore& followers,
                                size_t records, long long max_count = 3) {
    std::uniform_int_distribution<size_t> h(0, headers.size() - 1), f(0, followers.size() - 1);
    std::uniform_int_distribution<long long> c(1, max_count);
    std::vector<PairRecord> out;
    for (size_t i = 0; i < headers.size(); ++i) out.push_back({headers.id(i), followers.id(f(rng)), c(rng)});
    for (size_t i = headers.size(); i < records; ++i) out.push_back({headers.id(h(rng)), followers.id(f(rng)), c(rng)});
    return PairDataset(fontpair::PairRole::header_body, out);
}

inline double plain_cos(const Vector& a, const Vector& b) {
    double dot = 0, na = 0, nb = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        dot += a(i) * b(i);
        na += a(i) * a(i);
        nb += b(i) * b(i);
    }
    return dot / std::sqrt(na * nb);
}

/// Straight-line DS-kNN: rank every training header by cosine, expand the
/// pair lists of the first K1 into individual instances, and average the K2
/// best terms per follower. Instance ties go to the more similar header,
/// then header id, then follower id.
inline std::vector<std::pair<std::string, double>> brute_dsknn(const Vector& query, const PairDataset& train,
                                                                const FeatureStore& headers,
                                                                const FeatureStore& followers, size_t k1, size_t k2,
                                                                bool use_idf) {
    std::vector<std::pair<double, std::string>> hs;
    for (const auto& h : train.headers()) hs.push_back({plain_cos(query, headers.at(h)), h});
    std::sort(hs.begin(), hs.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    hs.resize(std::min(k1, hs.size()));

    // idf from scratch: m / number of distinct headers per follower
    std::map<std::string, std::set<std::string>> headers_of;
    for (const auto& r : train.records()) headers_of[r.follower_id].insert(r.header_id);
    const double m = static_cast<double>(train.headers().size());

    struct Inst {
        std::string follower, header;
        double hsim;
    };
    std::vector<Inst> inst;
    for (const auto& [sim, h] : hs)
        for (const auto& r : train.records())
            if (r.header_id == h)
                for (long long c = 0; c < r.count; ++c) inst.push_back({r.follower_id, h, sim});

    std::vector<std::pair<std::string, double>> out;
    for (size_t j = 0; j < followers.size(); ++j) {
        const Vector& y = followers.vector(j);
        std::vector<std::tuple<double, double, std::string, std::string, double>> terms;
        for (const auto& in : inst) {
            double fc = plain_cos(y, followers.at(in.follower));
            double w = use_idf ? m / static_cast<double>(headers_of[in.follower].size()) : 1.0;
            terms.emplace_back(fc, in.hsim, in.header, in.follower, w);
        }
        std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
            if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
            if (std::get<2>(a) != std::get<2>(b)) return std::get<2>(a) < std::get<2>(b);
            return std::get<3>(a) < std::get<3>(b);
        });
        size_t take = std::min(k2, terms.size());
        double s = 0;
        for (size_t t = 0; t < take; ++t) s += std::get<0>(terms[t]) * std::get<1>(terms[t]) * std::get<4>(terms[t]);
        out.push_back({followers.id(j), s / static_cast<double>(take)});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return out;
}

/// Labeled pairs drawn from a hidden bilinear rule x^T G* y: positives above
/// +margin, negatives below -margin. Headers and followers are separate fonts.
struct PlantedData {
    FeatureStore store;
    std::vector<LabeledPair> pairs;
    Matrix G_star;
};

inline PlantedData planted_bilinear(std::uint64_t seed, size_t dim, size_t per_class, bool skew, double margin = 0.3,
                                    size_t fonts_per_side = 200) {
    std::mt19937_64 rng(seed);
    PlantedData p;
    Matrix A(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    std::normal_distribution<double> nd(0.0, 1.0);
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = nd(rng);
    p.G_star = skew ? Matrix(A - A.transpose()) : Matrix(A + A.transpose());

    const double sd = 1.0 / std::sqrt(static_cast<double>(dim));  // roughly unit-norm features
    std::vector<std::string> hs, fs;
    for (size_t i = 0; i < fonts_per_side; ++i) {
        hs.push_back("H" + std::to_string(i));
        fs.push_back("F" + std::to_string(i));
        p.store.insert(hs.back(), gaussian_vector(rng, dim, sd));
        p.store.insert(fs.back(), gaussian_vector(rng, dim, sd));
    }
    std::uniform_int_distribution<size_t> pick(0, fonts_per_side - 1);
    std::set<std::pair<size_t, size_t>> used;
    size_t pos = 0, neg = 0;
    while (pos < per_class || neg < per_class) {
        size_t i = pick(rng), j = pick(rng);
        if (!used.insert({i, j}).second) continue;
        double s = p.store.at(hs[i]).dot(p.G_star * p.store.at(fs[j]));
        if (s > margin && pos < per_class) {
            p.pairs.push_back({hs[i], fs[j], 1, 1});
            ++pos;
        } else if (s < -margin && neg < per_class) {
            p.pairs.push_back({hs[i], fs[j], -1, 1});
            ++neg;
        }
    }
    return p;
}

}  // namespace fixtures
