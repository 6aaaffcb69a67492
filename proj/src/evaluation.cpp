#include "fontpair/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <random>

namespace fontpair {

void EvalConfig::validate() const {
    if (folds < 2) throw Error("evaluation needs at least two folds");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw Error("holdout fraction must lie in (0, 1)");
}

TopNReport topn_metrics(const std::vector<std::string>& recommended, const std::set<std::string>& ground_truth,
                        size_t n, const IdfTable& idf) {
    if (n == 0) throw Error("top-N metrics need N >= 1");
    if (ground_truth.empty()) throw Error("top-N metrics need a non-empty ground truth");
    TopNReport r;
    r.n = n;
    std::set<std::string> seen;
    double weighted_tp = 0.0;
    size_t hits = 0;
    for (size_t i = 0; i < std::min(n, recommended.size()); ++i) {
        const auto& id = recommended[i];
        if (!seen.insert(id).second) continue;
        if (ground_truth.count(id)) {
            ++hits;
            weighted_tp += idf.weight(id);
        }
    }
    double weighted_gt = 0.0;
    for (const auto& id : ground_truth) weighted_gt += idf.weight(id);

    r.hits = static_cast<double>(hits);
    r.precision = static_cast<double>(hits) / static_cast<double>(n);
    r.recall = static_cast<double>(hits) / static_cast<double>(ground_truth.size());
    r.weighted_precision = weighted_tp / static_cast<double>(n);
    r.weighted_recall = weighted_gt > 0.0 ? weighted_tp / weighted_gt : 0.0;
    return r;
}

TopNEvaluation evaluate_topn(const Recommender& recommender, const PairDataset& test, const PairDataset& train,
                             const FeatureStore& features, const std::vector<size_t>& ns, const EvalConfig& cfg) {
    if (ns.empty()) throw Error("evaluate_topn: no N values requested");
    const size_t max_n = *std::max_element(ns.begin(), ns.end());
    const IdfTable idf = compute_idf(train);
    std::set<std::string> excluded;
    if (cfg.non_popular_filter) excluded = popular_followers(train, cfg.popular_top_k);

    TopNEvaluation out;
    out.per_n.resize(ns.size());
    for (size_t i = 0; i < ns.size(); ++i) out.per_n[i].n = ns[i];

    // headers() is sorted, so the reduction order is fixed
    for (const auto& header : test.headers()) {
        const Vector* x = features.find(header);
        std::set<std::string> truth;
        for (const auto& fc : test.pairs_of(header))
            if (!excluded.count(fc.follower_id)) truth.insert(fc.follower_id);
        if (!x || truth.empty()) {
            ++out.headers_skipped;
            continue;
        }
        std::vector<std::string> ids;
        for (auto& s : recommender(header, *x, max_n)) ids.push_back(std::move(s.font_id));
        for (size_t i = 0; i < ns.size(); ++i) {
            TopNReport r = topn_metrics(ids, truth, ns[i], idf);
            auto& acc = out.per_n[i];
            acc.precision += r.precision;
            acc.recall += r.recall;
            acc.weighted_precision += r.weighted_precision;
            acc.weighted_recall += r.weighted_recall;
            acc.hits += r.hits;
        }
        ++out.headers_evaluated;
    }
    if (out.headers_evaluated) {
        const auto k = static_cast<double>(out.headers_evaluated);
        for (auto& acc : out.per_n) {
            acc.precision /= k;
            acc.recall /= k;
            acc.weighted_precision /= k;
            acc.weighted_recall /= k;
            acc.hits /= k;
        }
    }
    return out;
}

// ---------------------------------------------------------------- binary classification

namespace {

void require_both_classes(const std::vector<int>& labels) {
    bool pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
    bool neg = std::find(labels.begin(), labels.end(), -1) != labels.end();
    if (!pos || !neg) throw Error("binary evaluation needs both positive and negative pairs");
}

double accuracy_at(const std::vector<double>& scores, const std::vector<int>& labels, double t) {
    size_t correct = 0;
    for (size_t i = 0; i < scores.size(); ++i)
        if ((scores[i] >= t ? 1 : -1) == labels[i]) ++correct;
    return scores.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(scores.size());
}

}  // namespace

double best_threshold(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
    if (scores.empty()) throw Error("cannot fit a threshold without data");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // Start below every score (all predicted positive) and sweep upwards;
    // each step past a group of equal scores flips that group to negative.
    long long correct = 0;
    for (int l : labels)
        if (l == 1) ++correct;
    const double lo = scores[order.front()], hi = scores[order.back()];
    double best_t = lo - 1.0;
    long long best_correct = correct;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        const double s = scores[order[i]];
        while (j < order.size() && scores[order[j]] == s) {
            correct += labels[order[j]] == 1 ? -1 : 1;
            ++j;
        }
        double t = j < order.size() ? 0.5 * (s + scores[order[j]]) : hi + 1.0;
        if (correct > best_correct) {
            best_correct = correct;
            best_t = t;
        }
        i = j;
    }
    return best_t;
}

ThresholdFit select_threshold(const std::vector<double>& scores, const std::vector<int>& labels, size_t folds,
                              std::uint64_t seed) {
    if (folds < 2) throw Error("cross-validation needs at least two folds");
    require_both_classes(labels);
    const size_t n = scores.size();
    folds = std::min(folds, n);

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> fold_thresholds;
    size_t correct = 0;
    for (size_t f = 0; f < folds; ++f) {
        std::vector<double> tr_s, te_s;
        std::vector<int> tr_l, te_l;
        for (size_t i = 0; i < n; ++i) {
            size_t k = order[i];
            if (i % folds == f) {
                te_s.push_back(scores[k]);
                te_l.push_back(labels[k]);
            } else {
                tr_s.push_back(scores[k]);
                tr_l.push_back(labels[k]);
            }
        }
        double t = best_threshold(tr_s, tr_l);
        fold_thresholds.push_back(t);
        correct += static_cast<size_t>(std::llround(accuracy_at(te_s, te_l, t) * static_cast<double>(te_s.size())));
    }
    std::sort(fold_thresholds.begin(), fold_thresholds.end());
    const size_t mid = fold_thresholds.size() / 2;
    ThresholdFit fit;
    fit.threshold = fold_thresholds.size() % 2 ? fold_thresholds[mid]
                                               : 0.5 * (fold_thresholds[mid - 1] + fold_thresholds[mid]);
    fit.cv_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return fit;
}

BinaryResult binary_eval(const PairScorer& scorer, const std::vector<LabeledPair>& train,
                         const std::vector<LabeledPair>& test, const EvalConfig& cfg) {
    cfg.validate();
    std::vector<double> tr_s, te_s;
    std::vector<int> tr_l, te_l;
    for (const auto& p : train) {
        tr_s.push_back(scorer(p.header_id, p.follower_id));
        tr_l.push_back(p.label);
    }
    for (const auto& p : test) {
        te_s.push_back(scorer(p.header_id, p.follower_id));
        te_l.push_back(p.label);
    }
    require_both_classes(tr_l);
    if (test.empty()) throw Error("binary evaluation needs test pairs");

    ThresholdFit fit = select_threshold(tr_s, tr_l, cfg.folds, cfg.seed);
    BinaryResult r;
    r.threshold = fit.threshold;
    r.cv_accuracy = fit.cv_accuracy;
    r.accuracy = accuracy_at(te_s, te_l, fit.threshold);
    r.test_size = test.size();
    return r;
}

BinaryResult binary_eval(const PairScorer& scorer, const std::vector<LabeledPair>& labeled, const EvalConfig& cfg) {
    cfg.validate();
    std::vector<int> labels;
    for (const auto& p : labeled) labels.push_back(p.label);
    require_both_classes(labels);

    std::mt19937_64 rng(cfg.seed);
    std::vector<LabeledPair> train, test;
    for (int cls : {1, -1}) {
        std::vector<const LabeledPair*> group;
        for (const auto& p : labeled)
            if (p.label == cls) group.push_back(&p);
        std::shuffle(group.begin(), group.end(), rng);
        auto n_test = static_cast<size_t>(std::llround(cfg.holdout_fraction * static_cast<double>(group.size())));
        n_test = std::clamp<size_t>(n_test, 1, group.size() > 1 ? group.size() - 1 : 1);
        for (size_t i = 0; i < group.size(); ++i) (i < n_test ? test : train).push_back(*group[i]);
    }
    return binary_eval(scorer, train, test, cfg);
}

GammaSelection select_gamma(const std::vector<LabeledPair>& pairs, const FeatureStore& store, bool symmetric_G,
                            const TrainConfig& cfg, const std::vector<double>& grid, size_t folds, std::uint64_t seed) {
    if (grid.empty()) throw Error("gamma grid is empty");
    for (double g : grid)
        if (!(g > 0) || !std::isfinite(g)) throw Error("gamma values must be positive");
    if (folds < 2) throw Error("cross-validation needs at least two folds");
    std::vector<int> labels;
    for (const auto& p : pairs) labels.push_back(p.label);
    require_both_classes(labels);

    // stratified fold assignment
    std::vector<size_t> fold_of(pairs.size());
    std::mt19937_64 rng(seed);
    for (int cls : {1, -1}) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < pairs.size(); ++i)
            if (pairs[i].label == cls) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (size_t k = 0; k < idx.size(); ++k) fold_of[idx[k]] = k % folds;
    }

    GammaSelection sel;
    double best = -1.0;
    for (double gamma : grid) {
        size_t correct = 0;
        for (size_t f = 0; f < folds; ++f) {
            std::vector<LabeledPair> tr, te;
            for (size_t i = 0; i < pairs.size(); ++i) (fold_of[i] == f ? te : tr).push_back(pairs[i]);
            if (te.empty() || tr.empty()) continue;
            MetricModel m = train_asml(tr, store, cfg, gamma, symmetric_G);
            auto scores_of = [&](const std::vector<LabeledPair>& ps, std::vector<double>& s, std::vector<int>& l) {
                for (const auto& p : ps) {
                    s.push_back(score(m, store.at(p.header_id), store.at(p.follower_id)));
                    l.push_back(p.label);
                }
            };
            std::vector<double> tr_s, te_s;
            std::vector<int> tr_l, te_l;
            scores_of(tr, tr_s, tr_l);
            scores_of(te, te_s, te_l);
            double t = best_threshold(tr_s, tr_l);
            correct += static_cast<size_t>(std::llround(accuracy_at(te_s, te_l, t) * static_cast<double>(te_s.size())));
        }
        double acc = static_cast<double>(correct) / static_cast<double>(pairs.size());
        sel.cv_accuracy.push_back(acc);
        if (acc > best || (acc == best && gamma > sel.gamma)) {
            best = acc;
            sel.gamma = gamma;
        }
    }
    return sel;
}

// ---------------------------------------------------------------- rating prediction

double rating_prediction(const PairScorer& scorer, Polarity polarity, const std::vector<RatingComparison>& items) {
    if (items.empty()) return 0.0;
    double credit = 0.0;
    for (const auto& it : items) {
        double a = scorer(it.header_id, it.follower_a);
        double b = scorer(it.header_id, it.follower_b);
        if (polarity == Polarity::lower_is_better) {
            a = -a;
            b = -b;
        }
        if (a == b) {
            credit += 0.5;
        } else {
            int predicted = a > b ? 0 : 1;
            if (predicted == it.preferred) credit += 1.0;
        }
    }
    return credit / static_cast<double>(items.size());
}

std::vector<RatingComparison> load_rating_comparisons(std::istream& in, double min_consistency) {
    std::vector<RatingComparison> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto f = split(t, '\t');
        if (f.size() != 5)
            throw ParseError("line " + std::to_string(lineno) +
                             ": expected 'header<TAB>follower_a<TAB>follower_b<TAB>hits_a<TAB>hits_b'");
        long long ha = parse_int(f[3]), hb = parse_int(f[4]);
        if (ha < 0 || hb < 0 || ha + hb == 0) throw ParseError("line " + std::to_string(lineno) + ": bad hit counts");
        if (ha == hb) continue;
        double d = static_cast<double>(std::llabs(ha - hb)) / static_cast<double>(ha + hb);
        if (d < min_consistency) continue;
        out.push_back({std::string(trim(f[0])), std::string(trim(f[1])), std::string(trim(f[2])), ha > hb ? 0 : 1});
    }
    return out;
}

// ---------------------------------------------------------------- popularity filter

std::set<std::string> popular_followers(const PairDataset& dataset, size_t top_k) {
    std::set<std::string> out;
    for (const auto& [id, _] : popularity_ranking(dataset)) {
        if (out.size() == top_k) break;
        out.insert(id);
    }
    return out;
}

PairDataset filter_followers(const PairDataset& dataset, const std::set<std::string>& excluded) {
    return dataset.filter([&](const PairRecord& r) { return !excluded.count(r.follower_id); });
}

PairDataset filter_non_popular(const PairDataset& dataset, size_t top_k) {
    return filter_followers(dataset, popular_followers(dataset, top_k));
}

}  // namespace fontpair
