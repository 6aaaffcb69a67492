#include "support.hpp"

#include "fontpair/evaluation.hpp"

#include <doctest.h>

#include <limits>
#include <sstream>

using namespace fontpair;

namespace {

// m = 6 headers: "a" pairs with three of them (idf 2), "b" with two (idf 3)
IdfTable toy_idf() {
    std::vector<PairRecord> r = {{"H0", "a", 1}, {"H1", "a", 1}, {"H2", "a", 1}, {"H3", "b", 1},
                                 {"H4", "b", 1}, {"H5", "c", 1}};
    return compute_idf(PairDataset(PairRole::header_body, r));
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("topn_metrics examples") {
    IdfTable idf = toy_idf();
    SUBCASE("perfect retrieval") {
        auto r = topn_metrics({"a", "b"}, {"a", "b"}, 2, idf);
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 1.0);
        CHECK(r.weighted_recall == 1.0);
    }
    SUBCASE("disjoint") {
        auto r = topn_metrics({"x", "y"}, {"a", "b"}, 2, idf);
        CHECK(r.precision == 0.0);
        CHECK(r.recall == 0.0);
        CHECK(r.weighted_precision == 0.0);
        CHECK(r.weighted_recall == 0.0);
    }
    SUBCASE("hit idf 2, ground-truth idf mass 5") {
        auto r = topn_metrics({"a", "z"}, {"a", "b"}, 2, idf);
        CHECK(r.weighted_precision == 1.0);
        CHECK(r.weighted_recall == 0.4);
        CHECK(r.precision == 0.5);
    }
    SUBCASE("weighted precision may exceed one") {
        auto r = topn_metrics({"b"}, {"b"}, 1, idf);
        CHECK(r.weighted_precision == 3.0);
    }
    CHECK_THROWS_AS(topn_metrics({"a"}, {}, 1, idf), Error);
    CHECK_THROWS_AS(topn_metrics({"a"}, {"a"}, 0, idf), Error);
}

TEST_CASE("consistency identities on randomized fixtures") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 100; ++t) {
        std::uniform_int_distribution<int> universe_size(5, 40);
        const int u = universe_size(rng);
        std::vector<std::string> ids;
        for (int i = 0; i < u; ++i) ids.push_back("f" + std::to_string(i));
        std::vector<std::string> shuffled = ids;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::uniform_int_distribution<int> gt_size(1, u), n_pick(1, u);
        std::set<std::string> gt(shuffled.begin(), shuffled.begin() + gt_size(rng));
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const size_t n = static_cast<size_t>(n_pick(rng));
        IdfTable unit = IdfTable::uniform(ids);

        size_t hits = 0;
        for (size_t i = 0; i < n; ++i) hits += gt.count(shuffled[i]);
        auto r = topn_metrics(shuffled, gt, n, unit);
        CHECK(r.hits == static_cast<double>(hits));
        CHECK(r.precision == static_cast<double>(hits) / static_cast<double>(n));
        CHECK(r.recall == static_cast<double>(hits) / static_cast<double>(gt.size()));
        CHECK(std::abs(r.precision * static_cast<double>(n) - static_cast<double>(hits)) < 1e-12);
        CHECK(std::abs(r.recall * static_cast<double>(gt.size()) - static_cast<double>(hits)) < 1e-12);
        CHECK(r.weighted_precision == r.precision);
        CHECK(r.weighted_recall == r.recall);
        CHECK(r.recall <= 1.0);
        CHECK(r.weighted_recall <= 1.0);
    }
}

TEST_CASE("evaluate_topn: echoing the ground truth gives precision 1 at N = |GT|") {
    std::mt19937_64 rng(22);
    FeatureStore hs = fixtures::random_store(rng, "h", 12, 3);
    std::vector<PairRecord> train_r, test_r;
    for (int h = 0; h < 6; ++h)
        for (int f = 0; f < 3; ++f) train_r.push_back({hs.id(static_cast<size_t>(h)), "F" + std::to_string(h + f), 1});
    for (int h = 6; h < 12; ++h)
        for (int f = 0; f < 3; ++f) test_r.push_back({hs.id(static_cast<size_t>(h)), "F" + std::to_string(h + f), 1});
    PairDataset train(PairRole::header_body, train_r), test(PairRole::header_body, test_r);
    Recommender echo = [&](const std::string& id, const Vector&, size_t n) {
        Ranking r;
        for (const auto& fc : test.pairs_of(id))
            if (r.size() < n) r.push_back({fc.follower_id, 1.0});
        return r;
    };
    EvalConfig cfg;
    auto ev = evaluate_topn(echo, test, train, hs, {3}, cfg);
    CHECK(ev.headers_evaluated == 6);
    CHECK(ev.per_n[0].precision == 1.0);
    CHECK(ev.per_n[0].recall == 1.0);
}

TEST_CASE("evaluate_topn: random recommender sits near |GT| / store size") {
    std::mt19937_64 rng(23);
    const int store = 200, gt = 5, headers = 400;
    FeatureStore hs = fixtures::random_store(rng, "h", headers, 2);
    std::vector<PairRecord> test_r;
    std::uniform_int_distribution<int> pick(0, store - 1);
    for (int h = 0; h < headers; ++h) {
        std::set<int> chosen;
        while (chosen.size() < gt) chosen.insert(pick(rng));
        for (int f : chosen) test_r.push_back({hs.id(static_cast<size_t>(h)), "F" + std::to_string(f), 1});
    }
    PairDataset test(PairRole::header_body, test_r);
    PairDataset train(PairRole::header_body, {{"T", "F0", 1}});
    std::vector<std::string> all;
    for (int f = 0; f < store; ++f) all.push_back("F" + std::to_string(f));
    Recommender random_rec = [&](const std::string&, const Vector&, size_t n) {
        std::vector<std::string> s = all;
        std::shuffle(s.begin(), s.end(), rng);
        Ranking r;
        for (size_t i = 0; i < n; ++i) r.push_back({s[i], 0.0});
        return r;
    };
    const size_t N = 10;
    auto ev = evaluate_topn(random_rec, test, train, hs, {N}, EvalConfig{});
    // hits per header ~ hypergeometric(200, 5, 10): mean 0.25
    const double p = static_cast<double>(gt) / store;
    const double var_hits = N * p * (1 - p) * (store - N) / (store - 1.0);
    const double sd_precision = std::sqrt(var_hits) / N / std::sqrt(static_cast<double>(headers));
    CHECK(std::abs(ev.per_n[0].precision - p) < 3 * sd_precision);
}

TEST_CASE("evaluate_topn: idf from train, skipped headers, non-popular filter") {
    FeatureStore hs;
    hs.insert("Q1", Vector::Ones(2));
    hs.insert("Q2", Vector::Ones(2));
    // train: Pop with 3 headers (idf 1), Rare with one (idf 3)
    PairDataset train(PairRole::header_body, {{"A", "Pop", 5}, {"B", "Pop", 1}, {"C", "Pop", 1}, {"A", "Rare", 1}});
    PairDataset test(PairRole::header_body, {{"Q1", "Pop", 1}, {"Q1", "Rare", 1}, {"Q3", "Pop", 1}});
    Recommender fixed = [](const std::string&, const Vector&, size_t) { return Ranking{{"Rare", 1.0}, {"Pop", 0.5}}; };
    EvalConfig cfg;
    auto ev = evaluate_topn(fixed, test, train, hs, {1, 2}, cfg);
    CHECK(ev.headers_evaluated == 1);
    CHECK(ev.headers_skipped == 1);  // Q3 has no features
    CHECK(ev.per_n[0].weighted_precision == 3.0);
    CHECK(ev.per_n[0].weighted_recall == 0.75);
    CHECK(ev.per_n[1].weighted_recall == 1.0);

    cfg.non_popular_filter = true;
    cfg.popular_top_k = 1;
    auto np = evaluate_topn(fixed, test, train, hs, {1}, cfg);
    CHECK(np.headers_evaluated == 1);
    CHECK(np.per_n[0].recall == 1.0);  // ground truth reduced to {Rare}
}

TEST_CASE("best_threshold sweeps midpoints and sentinels") {
    CHECK(best_threshold({1, 2, 3, 4}, {-1, -1, 1, 1}) == 2.5);
    CHECK(best_threshold({1, 2}, {1, 1}) < 1.0);
    CHECK(best_threshold({1, 2}, {-1, -1}) > 2.0);
    // inverted scorer: best is everything positive or everything negative; the smaller cut wins
    CHECK(best_threshold({1, 2}, {1, -1}) < 1.0);
}

TEST_CASE("binary_eval: oracle, constant and negated scorers") {
    std::vector<LabeledPair> data;
    for (int i = 0; i < 400; ++i) data.push_back({"h" + std::to_string(i), "f", i % 2 ? 1 : -1, 1});
    EvalConfig cfg;
    cfg.seed = 3;
    PairScorer oracle = [](const std::string& h, const std::string&) {
        return (std::stoi(h.substr(1)) % 2) ? 1.0 : -1.0;
    };
    CHECK(binary_eval(oracle, data, cfg).accuracy == 1.0);
    PairScorer constant = [](const std::string&, const std::string&) { return 0.25; };
    CHECK(binary_eval(constant, data, cfg).accuracy == doctest::Approx(0.5).epsilon(0.1));
    PairScorer negated = [&](const std::string& h, const std::string& f) { return -oracle(h, f); };
    // a negated scorer cannot be rescued by a threshold on "score >= t"
    CHECK(binary_eval(negated, data, cfg).accuracy <= 0.5);

    std::vector<LabeledPair> one_class = {{"a", "b", 1, 1}, {"c", "d", 1, 1}};
    CHECK_THROWS_AS(binary_eval(oracle, one_class, cfg), Error);
}

TEST_CASE("select_threshold is deterministic and recovers a clean split") {
    std::vector<double> s;
    std::vector<int> l;
    for (int i = 0; i < 100; ++i) {
        s.push_back(i);
        l.push_back(i >= 40 ? 1 : -1);
    }
    auto a = select_threshold(s, l, 5, 9), b = select_threshold(s, l, 5, 9);
    CHECK(a.threshold == b.threshold);
    CHECK(a.threshold > 39.0);
    CHECK(a.threshold <= 40.0);
    CHECK(a.cv_accuracy >= 0.95);
}

TEST_CASE("rating prediction") {
    std::vector<RatingComparison> items = {{"A", "x", "y", 0}, {"A", "y", "z", 1}, {"B", "x", "z", 0}};
    std::map<std::string, double> good = {{"x", 3}, {"y", 2}, {"z", 1}};
    PairScorer aligned = [&](const std::string&, const std::string& f) {
        return f == "z" ? 2.5 : good[f];  // x > z > y
    };
    CHECK(rating_prediction(aligned, Polarity::higher_is_better, items) == 1.0);
    PairScorer flat = [](const std::string&, const std::string&) { return 1.0; };
    CHECK(rating_prediction(flat, Polarity::higher_is_better, items) == 0.5);
    PairScorer distance = [&](const std::string& h, const std::string& f) { return -aligned(h, f); };
    CHECK(rating_prediction(distance, Polarity::lower_is_better, items) == 1.0);
}

TEST_CASE("rating prediction with a popularity scorer on a hand-checked set") {
    PairDataset train(PairRole::header_body, {{"H", "P", 4}, {"H", "Q", 2}, {"J", "Q", 1}, {"J", "R", 1}});
    auto counts = popularity_counts(train);
    PairScorer pop = [&](const std::string&, const std::string& f) {
        auto it = counts.find(f);
        return it == counts.end() ? 0.0 : static_cast<double>(it->second);
    };
    // counts: P 4, Q 3, R 1, S 0
    std::vector<RatingComparison> items = {
        {"X", "P", "Q", 0},  // predicts P: right
        {"X", "R", "Q", 0},  // predicts Q: wrong
        {"X", "S", "R", 1},  // predicts R: right
        {"X", "S", "T", 0},  // tie: half
    };
    CHECK(rating_prediction(pop, Polarity::higher_is_better, items) == 2.5 / 4.0);
}

TEST_CASE("load_rating_comparisons drops ties and low-consistency items") {
    std::istringstream in("H\ta\tb\t8\t3\nH\ta\tc\t5\t5\nH\tb\tc\t5\t6\n");
    auto all = load_rating_comparisons(in);
    REQUIRE(all.size() == 2);
    CHECK(all[0].preferred == 0);
    CHECK(all[1].preferred == 1);
    std::istringstream in2("H\ta\tb\t8\t3\nH\tb\tc\t5\t6\n");
    CHECK(load_rating_comparisons(in2, 0.2).size() == 1);
}

TEST_CASE("filter_non_popular") {
    PairDataset d(PairRole::header_body,
                  {{"A", "X", 5}, {"B", "X", 1}, {"A", "Y", 4}, {"C", "Z", 2}, {"C", "W", 1}, {"D", "W", 1}});
    CHECK(filter_non_popular(d, 0) == d);
    CHECK(filter_non_popular(d, 4).empty());
    CHECK(filter_non_popular(d, 10).empty());
    // counts X 6, Y 4, W 2, Z 2 -> top two are X and Y
    PairDataset two = filter_non_popular(d, 2);
    CHECK(two == PairDataset(PairRole::header_body, {{"C", "Z", 2}, {"C", "W", 1}, {"D", "W", 1}}));
}

TEST_CASE("removing a fixed popular set is idempotent") {
    std::mt19937_64 rng(24);
    FeatureStore hs = fixtures::random_store(rng, "h", 10, 2), fs = fixtures::random_store(rng, "f", 20, 2);
    PairDataset d = fixtures::random_pairs(rng, hs, fs, 80, 5);
    for (size_t k : {0, 1, 3, 10, 50}) {
        auto popular = popular_followers(d, k);
        PairDataset once = filter_followers(d, popular);
        CHECK(filter_followers(once, popular) == once);
        CHECK(once == filter_non_popular(d, k));
    }
}

TEST_CASE("select_gamma prefers the weak regulariser on learnable skew data") {
    auto data = fixtures::planted_bilinear(12, 4, 120, true, 0.3, 60);
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.epochs = 40;
    cfg.seed = 1;
    const std::vector<double> grid = {1e6, 1e-3};
    auto sel = select_gamma(data.pairs, data.store, false, cfg, grid, 4, 2);
    REQUIRE(sel.cv_accuracy.size() == 2);
    CHECK(sel.gamma == 1e-3);
    CHECK(sel.cv_accuracy[1] > sel.cv_accuracy[0] + 0.2);
    auto again = select_gamma(data.pairs, data.store, false, cfg, grid, 4, 2);
    CHECK(again.cv_accuracy == sel.cv_accuracy);
    CHECK_THROWS_AS(select_gamma(data.pairs, data.store, false, cfg, {}, 4, 2), Error);
    CHECK_THROWS_AS(select_gamma(data.pairs, data.store, false, cfg, {-1.0}, 4, 2), Error);
    CHECK_THROWS_AS(select_gamma(data.pairs, data.store, false, cfg, grid, 1, 2), Error);
}

}  // TEST_SUITE
