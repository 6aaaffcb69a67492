#include "support.hpp"

#include "fontpair/study_analytics.hpp"

#include <doctest.h>

#include <numeric>
#include <sstream>

using namespace fontpair;

namespace {

// independent binning: floor(d * bins) in floating point, last bin closed
size_t float_bin(double d, size_t bins) { return std::min(static_cast<size_t>(d * static_cast<double>(bins)), bins - 1); }

// best strengths on a simplex grid with step h, restricted to a box around `center` when given
std::vector<double> grid_search_bt(const Matrix& wins, double h, const std::vector<double>* center, double radius) {
    std::vector<double> best;
    double best_ll = -std::numeric_limits<double>::infinity();
    auto in_box = [&](double v, size_t i) { return !center || std::abs(v - (*center)[i]) <= radius + 1e-15; };
    auto lo = [&](size_t i) { return center ? std::max(h, (*center)[i] - radius) : h; };
    for (double a = lo(0); a < 1.0; a += h) {
        if (!in_box(a, 0)) continue;
        for (double b = lo(1); a + b < 1.0; b += h) {
            if (!in_box(b, 1)) continue;
            for (double c = lo(2); a + b + c < 1.0 - h / 2; c += h) {
                if (!in_box(c, 2)) continue;
                double d = 1.0 - a - b - c;
                if (!in_box(d, 3)) continue;
                std::vector<double> s = {a, b, c, d};
                double ll = 0.0;
                for (Eigen::Index i = 0; i < 4; ++i)
                    for (Eigen::Index j = 0; j < 4; ++j)
                        if (i != j && wins(i, j) > 0)
                            ll += wins(i, j) * std::log(s[static_cast<size_t>(i)] /
                                                        (s[static_cast<size_t>(i)] + s[static_cast<size_t>(j)]));
                if (ll > best_ll) {
                    best_ll = ll;
                    best = s;
                }
            }
        }
    }
    return best;
}

}  // namespace

TEST_SUITE("study_analytics") {

TEST_CASE("normalized difference examples") {
    CHECK(normalized_difference(5, 6) == 1.0 / 11.0);
    CHECK(normalized_difference(11, 0) == 1.0);
    CHECK(normalized_difference(4, 4) == 0.0);
    CHECK_THROWS_AS(normalized_difference(0, 0), Error);
    CHECK_THROWS_AS(normalized_difference(-1, 3), Error);
}

TEST_CASE("normalized difference is symmetric and scale invariant") {
    for (long long a = 0; a < 15; ++a)
        for (long long b = 0; b < 15; ++b) {
            if (a + b == 0) continue;
            CHECK(normalized_difference(a, b) == normalized_difference(b, a));
            for (long long k : {2, 3, 7}) CHECK(normalized_difference(a * k, b * k) == normalized_difference(a, b));
            CHECK(consistency_bin(a, b, 6) == float_bin(normalized_difference(a, b), 6));
        }
}

TEST_CASE("bin edges: left closed, last bin closed at one") {
    CHECK(consistency_bin(1, 0, 6) == 5);
    CHECK(consistency_bin(2, 1, 6) == 2);  // d = 1/3 starts the third bin
    CHECK(consistency_bin(1, 1, 6) == 0);
    CHECK(consistency_bin(5, 1, 6) == 4);  // d = 2/3 starts the fifth bin
}

TEST_CASE("random rater pdf: one and two raters") {
    auto one = random_rater_pdf(1);
    CHECK(one == std::vector<double>{0, 0, 0, 0, 0, 1});
    auto two = random_rater_pdf(2);
    CHECK(two == std::vector<double>{0.5, 0, 0, 0, 0, 0.5});
    CHECK_THROWS_AS(random_rater_pdf(0), Error);
}

TEST_CASE("random rater pdf for 11 raters matches enumeration of all votes") {
    std::vector<double> expected(6, 0.0);
    for (unsigned votes = 0; votes < (1u << 11); ++votes) {
        int h1 = __builtin_popcount(votes);
        double d = std::abs(2.0 * h1 - 11.0) / 11.0;
        expected[float_bin(d, 6)] += 1.0 / 2048.0;
    }
    auto pdf = random_rater_pdf(11);
    for (size_t j = 0; j < 6; ++j) CHECK(pdf[j] == doctest::Approx(expected[j]).epsilon(1e-15));
}

TEST_CASE("random rater pdf sums to one") {
    for (long long n : {1, 5, 11, 40, 62, 63, 100, 1000}) {
        auto pdf = random_rater_pdf(n, 6);
        CHECK(std::abs(std::accumulate(pdf.begin(), pdf.end(), 0.0) - 1.0) < 1e-12);
        auto five = random_rater_pdf(n, 5);
        CHECK(std::abs(std::accumulate(five.begin(), five.end(), 0.0) - 1.0) < 1e-12);
    }
}

TEST_CASE("chi-squared statistic") {
    CHECK(chi_squared({3, 4, 5}, {3, 4, 5}).statistic == 0.0);
    auto r = chi_squared({10}, {5});
    CHECK(r.statistic == 5.0);
    CHECK(r.bins_used == 1);
    auto z = chi_squared({1, 10, 0}, {0, 5, 5});
    CHECK(z.bins_used == 2);
    CHECK(z.statistic == 10.0);
    auto sparse = chi_squared({1, 10, 2}, {2, 5, 4}, 5.0);
    CHECK(sparse.bins_used == 1);
    CHECK(sparse.statistic == 5.0);
    CHECK(sparse.degrees_of_freedom() == 0);
    CHECK_THROWS_AS(chi_squared({1}, {0}), Error);
    CHECK_THROWS_AS(chi_squared({1, 2}, {1}), Error);
}

TEST_CASE("critical values") {
    CHECK(kChiSquaredCritical005SixBins == 16.750);
    CHECK(kChiSquaredCritical005FiveBins == 14.860);
}

TEST_CASE("consistency report: unanimous records") {
    std::vector<ComparisonRecord> recs;
    for (int i = 0; i < 10; ++i) recs.push_back({"c" + std::to_string(i), "a", "b", i % 2 ? 11 : 0, i % 2 ? 0 : 11});
    auto rep = consistency_report(recs, 11);
    CHECK(rep.histogram.observed == std::vector<double>{0, 0, 0, 0, 0, 10});
    CHECK(rep.histogram.bin_edges.size() == 7);
    CHECK(rep.histogram.bin_edges.back() == 1.0);
    CHECK_FALSE(rep.omit_sparse.has_value());  // every e_j < 5 with only 10 records
}

TEST_CASE("consistency report: 20-record fixture binned by hand") {
    // (hit1, hit2) with d and the 6-bin index worked out by hand
    const std::vector<std::pair<int, int>> hits = {
        {6, 5},  {5, 6},  {4, 7},  {7, 4},  {3, 8},   // d = 1/11, 1/11, 3/11, 3/11, 5/11 -> 0 0 1 1 2
        {8, 3},  {2, 9},  {9, 2},  {1, 10}, {10, 1},  // 5/11, 7/11, 7/11, 9/11, 9/11 -> 2 3 3 4 4
        {0, 11}, {11, 0}, {6, 6},  {12, 0}, {9, 3},   // 1, 1, 0, 1, 1/2 -> 5 5 0 5 3
        {2, 2},  {3, 1},  {1, 2},  {5, 0},  {4, 3},   // 0, 1/2, 1/3, 1, 1/7 -> 0 3 2 5 0
    };
    std::vector<ComparisonRecord> recs;
    for (size_t i = 0; i < hits.size(); ++i) recs.push_back({std::to_string(i), "m1", "m2", hits[i].first, hits[i].second});
    auto rep = consistency_report(recs);
    CHECK(rep.histogram.observed == std::vector<double>{5, 2, 3, 4, 2, 4});
    double total = std::accumulate(rep.histogram.expected.begin(), rep.histogram.expected.end(), 0.0);
    CHECK(total == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("consistency report under fair-coin raters stays below the critical value") {
    std::mt19937_64 rng(31);
    std::binomial_distribution<long long> coin(11, 0.5);
    std::vector<ComparisonRecord> recs;
    for (int i = 0; i < 5000; ++i) {
        long long h = coin(rng);
        recs.push_back({std::to_string(i), "a", "b", h, 11 - h});
    }
    auto rep = consistency_report(recs, 11);
    CHECK(rep.all_bins.statistic < kChiSquaredCritical005SixBins);
    CHECK(rep.all_bins.bins_used == 6);
    REQUIRE(rep.omit_sparse.has_value());
    CHECK(rep.omit_sparse->bins_used == 5);  // top bin: e = 5000 * 2/2048 < 5
}

TEST_CASE("comparison files round-trip") {
    std::vector<ComparisonRecord> recs = {{"q1", "asml", "dsknn", 6, 5}, {"q2", "popularity", "asml", 0, 11}};
    std::stringstream io;
    for (const auto& r : recs) write_comparison(io, r);
    CHECK(load_comparisons(io) == recs);
    std::istringstream bad("q1\tasml\tdsknn\t0\t0\n");
    CHECK_THROWS_AS(load_comparisons(bad), ParseError);
}

TEST_CASE("bradley-terry: two items with wins 3:1") {
    Matrix w(2, 2);
    w << 0, 3, 1, 0;
    auto r = bradley_terry_fit(w);
    CHECK(r.converged);
    CHECK(std::abs(r.strengths[0] / r.strengths[1] - 3.0) < 1e-8);
    CHECK(r.strengths[0] + r.strengths[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("bradley-terry: symmetric wins give uniform strengths") {
    Matrix w = Matrix::Constant(3, 3, 4.0);
    w.diagonal().setZero();
    auto r = bradley_terry_fit(w);
    for (double s : r.strengths) CHECK(s == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("bradley-terry matches a simplex grid search on four items") {
    Matrix w(4, 4);
    w << 0, 7, 5, 9,  //
        3, 0, 6, 4,   //
        4, 2, 0, 6,   //
        1, 5, 3, 0;
    auto r = bradley_terry_fit(w);
    // coarse pass then a refined pass around the coarse optimum
    auto coarse = grid_search_bt(w, 0.01, nullptr, 0.0);
    auto fine = grid_search_bt(w, 0.0005, &coarse, 0.015);
    for (size_t i = 0; i < 4; ++i) CHECK(std::abs(r.strengths[i] - fine[i]) < 1e-3);
    CHECK(bradley_terry_log_likelihood(w, r.strengths) >= bradley_terry_log_likelihood(w, fine) - 1e-9);
}

TEST_CASE("bradley-terry is invariant to scaling and relabeling") {
    Matrix w(3, 3);
    w << 0, 4, 2, 1, 0, 5, 3, 2, 0;
    auto base = bradley_terry_fit(w);
    auto scaled = bradley_terry_fit(w * 7.0);
    for (size_t i = 0; i < 3; ++i) CHECK(scaled.strengths[i] == doctest::Approx(base.strengths[i]).epsilon(1e-9));
    // permutation (0 1 2) -> (2 0 1)
    const int perm[3] = {2, 0, 1};
    Matrix p(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) p(perm[i], perm[j]) = w(i, j);
    auto permuted = bradley_terry_fit(p);
    for (int i = 0; i < 3; ++i)
        CHECK(permuted.strengths[static_cast<size_t>(perm[i])] ==
              doctest::Approx(base.strengths[static_cast<size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("bradley-terry errors and warnings") {
    Matrix split = Matrix::Zero(4, 4);
    split(0, 1) = 2;
    split(1, 0) = 1;
    split(2, 3) = 1;
    try {
        bradley_terry_fit(split);
        FAIL("expected an error");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find("{0,1}") != std::string::npos);
        CHECK(msg.find("{2,3}") != std::string::npos);
    }
    CHECK_THROWS_AS(bradley_terry_fit(Matrix::Zero(2, 2)), Error);

    Matrix loser(2, 2);
    loser << 0, 3, 0, 0;
    auto r = bradley_terry_fit(loser);
    CHECK(r.zero_win_items == std::vector<size_t>{1});
    CHECK(r.strengths[1] < 1e-6);
}

TEST_CASE("method wins from comparison records") {
    std::vector<ComparisonRecord> recs = {{"1", "b", "a", 6, 5}, {"2", "a", "c", 2, 9}, {"3", "b", "a", 1, 0}};
    auto mw = method_wins(recs);
    CHECK(mw.methods == std::vector<std::string>{"a", "b", "c"});
    CHECK(mw.wins(1, 0) == 7);
    CHECK(mw.wins(0, 1) == 5);
    CHECK(mw.wins(0, 2) == 2);
    CHECK(mw.wins(2, 0) == 9);
}

}  // TEST_SUITE
