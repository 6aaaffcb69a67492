#pragma once

#include "fontpair/common.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fontpair {

/// Upper 0.005 critical values of the chi-squared test used for the
/// consistency check: 6 bins (5 degrees of freedom) and 5 bins (4).
inline constexpr double kChiSquaredCritical005SixBins = 16.750;
inline constexpr double kChiSquaredCritical005FiveBins = 14.860;

/// One pairwise human comparison between two options.
struct ComparisonRecord {
    std::string id;
    std::string method1;
    std::string method2;
    long long hit1 = 0;
    long long hit2 = 0;

    long long total() const { return hit1 + hit2; }
    bool operator==(const ComparisonRecord&) const = default;
};

/// Tab-separated `comparison_id method1 method2 hit1 hit2`.
std::vector<ComparisonRecord> load_comparisons(std::istream& in);
std::vector<ComparisonRecord> load_comparisons_file(const std::string& path);
void write_comparison(std::ostream& out, const ComparisonRecord& rec);

/// |hit1 - hit2| / (hit1 + hit2)
double normalized_difference(const ComparisonRecord& rec);
double normalized_difference(long long hit1, long long hit2);

/// Bin of a normalised difference among `bins` even bins of [0, 1]:
/// left-closed, right-open, the last bin closed at 1. Computed exactly
/// from the hit counts.
size_t consistency_bin(long long hit1, long long hit2, size_t bins);

/// Bin masses of d under `num_raters` independent fair-coin votes. Sums to 1.
std::vector<double> random_rater_pdf(long long num_raters, size_t bins = 6);

struct ChiSquaredResult {
    double statistic = 0.0;
    size_t bins_used = 0;

    size_t degrees_of_freedom() const { return bins_used > 0 ? bins_used - 1 : 0; }
};

/// sum_j (n_j - e_j)^2 / e_j over bins with e_j > 0 (and e_j >= omit_below
/// when given). Throws if no bin remains.
ChiSquaredResult chi_squared(const std::vector<double>& observed, const std::vector<double>& expected,
                             std::optional<double> omit_below = std::nullopt);

struct ConsistencyHistogram {
    std::vector<double> bin_edges;  ///< bins + 1 edges from 0 to 1
    std::vector<double> observed;   ///< n_j
    std::vector<double> expected;   ///< e_j under random raters
};

struct ConsistencyReport {
    ConsistencyHistogram histogram;
    ChiSquaredResult all_bins;       ///< only e_j = 0 bins omitted
    std::optional<ChiSquaredResult> omit_sparse;  ///< bins with e_j < 5 omitted as well; empty if none remain
};

/// Bins observed d values and compares against the random-rater null. When
/// `num_raters` is empty each record's null uses its own hit total.
ConsistencyReport consistency_report(const std::vector<ComparisonRecord>& records,
                                     std::optional<long long> num_raters = std::nullopt, size_t bins = 6);

/// Square matrix: wins(i, j) = times item i beat item j.
struct BradleyTerryResult {
    std::vector<double> strengths;  ///< normalised to sum 1
    size_t iterations = 0;
    bool converged = false;
    std::vector<size_t> zero_win_items;  ///< items whose strength tends to 0
};

BradleyTerryResult bradley_terry_fit(const Matrix& wins, double tolerance = 1e-10, size_t max_iterations = 10000);

/// Log-likelihood of strengths under the Bradley-Terry model.
double bradley_terry_log_likelihood(const Matrix& wins, const std::vector<double>& strengths);

/// Win matrix over the distinct methods named in `records` (sorted by name).
struct MethodWins {
    std::vector<std::string> methods;
    Matrix wins;
};
MethodWins method_wins(const std::vector<ComparisonRecord>& records);

}  // namespace fontpair
