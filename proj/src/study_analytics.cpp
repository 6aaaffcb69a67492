#include "fontpair/study_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

namespace fontpair {

std::vector<ComparisonRecord> load_comparisons(std::istream& in) {
    std::vector<ComparisonRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto f = split(t, '\t');
        if (f.size() != 5)
            throw ParseError("line " + std::to_string(lineno) + ": expected 'id<TAB>method1<TAB>method2<TAB>hit1<TAB>hit2'");
        ComparisonRecord r{std::string(trim(f[0])), std::string(trim(f[1])), std::string(trim(f[2])), parse_int(f[3]),
                           parse_int(f[4])};
        if (r.hit1 < 0 || r.hit2 < 0 || r.total() < 1)
            throw ParseError("line " + std::to_string(lineno) + ": hit counts must be non-negative with a positive total");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ComparisonRecord> load_comparisons_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open '" + path + "'");
    return load_comparisons(in);
}

void write_comparison(std::ostream& out, const ComparisonRecord& rec) {
    out << rec.id << '\t' << rec.method1 << '\t' << rec.method2 << '\t' << rec.hit1 << '\t' << rec.hit2 << '\n';
}

double normalized_difference(long long hit1, long long hit2) {
    if (hit1 < 0 || hit2 < 0) throw Error("hit counts must be non-negative");
    if (hit1 + hit2 == 0) throw Error("normalized difference of a comparison without ratings");
    return static_cast<double>(std::llabs(hit1 - hit2)) / static_cast<double>(hit1 + hit2);
}

double normalized_difference(const ComparisonRecord& rec) { return normalized_difference(rec.hit1, rec.hit2); }

size_t consistency_bin(long long hit1, long long hit2, size_t bins) {
    if (bins == 0) throw Error("need at least one bin");
    if (hit1 < 0 || hit2 < 0 || hit1 + hit2 == 0) throw Error("invalid hit counts");
    // floor(d * bins) with d = |h1 - h2| / (h1 + h2), in integers
    auto diff = static_cast<unsigned long long>(std::llabs(hit1 - hit2));
    auto total = static_cast<unsigned long long>(hit1 + hit2);
    auto bin = static_cast<size_t>(diff * bins / total);
    return std::min(bin, bins - 1);
}

namespace {

// P(X = k) for X ~ Binomial(n, 1/2)
std::vector<double> fair_binomial(long long n) {
    std::vector<double> p(static_cast<size_t>(n) + 1);
    if (n <= 62) {
        std::uint64_t c = 1;
        for (long long k = 0; k <= n; ++k) {
            p[static_cast<size_t>(k)] = std::ldexp(static_cast<double>(c), -static_cast<int>(n));
            // C(n, k+1) = C(n, k) * (n - k) / (k + 1); exact while it fits
            c = c / static_cast<std::uint64_t>(k + 1) * static_cast<std::uint64_t>(n - k) +
                c % static_cast<std::uint64_t>(k + 1) * static_cast<std::uint64_t>(n - k) / static_cast<std::uint64_t>(k + 1);
        }
    } else {
        const double ln2 = std::log(2.0);
        for (long long k = 0; k <= n; ++k)
            p[static_cast<size_t>(k)] = std::exp(std::lgamma(static_cast<double>(n) + 1.0) -
                                                 std::lgamma(static_cast<double>(k) + 1.0) -
                                                 std::lgamma(static_cast<double>(n - k) + 1.0) -
                                                 static_cast<double>(n) * ln2);
    }
    return p;
}

}  // namespace

std::vector<double> random_rater_pdf(long long num_raters, size_t bins) {
    if (num_raters < 1) throw Error("random rater pdf needs at least one rater");
    if (bins == 0) throw Error("need at least one bin");
    std::vector<double> mass(bins, 0.0);
    auto p = fair_binomial(num_raters);
    for (long long k = 0; k <= num_raters; ++k) mass[consistency_bin(k, num_raters - k, bins)] += p[static_cast<size_t>(k)];
    return mass;
}

ChiSquaredResult chi_squared(const std::vector<double>& observed, const std::vector<double>& expected,
                             std::optional<double> omit_below) {
    if (observed.size() != expected.size()) throw Error("observed and expected bin counts differ in length");
    ChiSquaredResult r;
    for (size_t j = 0; j < observed.size(); ++j) {
        const double e = expected[j];
        if (e <= 0.0) continue;
        if (omit_below && e < *omit_below) continue;
        const double diff = observed[j] - e;
        r.statistic += diff * diff / e;
        ++r.bins_used;
    }
    if (r.bins_used == 0) throw Error("chi-squared: every bin was omitted");
    return r;
}

ConsistencyReport consistency_report(const std::vector<ComparisonRecord>& records, std::optional<long long> num_raters,
                                     size_t bins) {
    if (records.empty()) throw Error("consistency report needs at least one comparison");
    ConsistencyReport rep;
    auto& h = rep.histogram;
    for (size_t j = 0; j <= bins; ++j) h.bin_edges.push_back(static_cast<double>(j) / static_cast<double>(bins));
    h.observed.assign(bins, 0.0);
    h.expected.assign(bins, 0.0);

    std::map<long long, long long> records_per_total;
    for (const auto& r : records) {
        h.observed[consistency_bin(r.hit1, r.hit2, bins)] += 1.0;
        ++records_per_total[num_raters ? *num_raters : r.total()];
    }
    for (const auto& [raters, count] : records_per_total) {
        auto pdf = random_rater_pdf(raters, bins);
        for (size_t j = 0; j < bins; ++j) h.expected[j] += pdf[j] * static_cast<double>(count);
    }
    rep.all_bins = chi_squared(h.observed, h.expected);
    bool any_dense = std::any_of(h.expected.begin(), h.expected.end(), [](double e) { return e >= 5.0; });
    if (any_dense) rep.omit_sparse = chi_squared(h.observed, h.expected, 5.0);
    return rep;
}

// ---------------------------------------------------------------- Bradley-Terry

namespace {

std::vector<std::vector<size_t>> components(const Matrix& games) {
    const auto n = static_cast<size_t>(games.rows());
    std::vector<int> label(n, -1);
    std::vector<std::vector<size_t>> out;
    for (size_t s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        out.emplace_back();
        std::vector<size_t> stack{s};
        label[s] = static_cast<int>(out.size() - 1);
        while (!stack.empty()) {
            size_t i = stack.back();
            stack.pop_back();
            out.back().push_back(i);
            for (size_t j = 0; j < n; ++j) {
                if (label[j] < 0 && games(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0) {
                    label[j] = label[s];
                    stack.push_back(j);
                }
            }
        }
    }
    return out;
}

}  // namespace

BradleyTerryResult bradley_terry_fit(const Matrix& wins, double tolerance, size_t max_iterations) {
    if (wins.rows() != wins.cols()) throw Error("Bradley-Terry: win matrix must be square");
    const auto n = wins.rows();
    if (n == 0) throw Error("Bradley-Terry: no items");
    if ((wins.array() < 0).any() || !wins.allFinite()) throw Error("Bradley-Terry: win counts must be finite and >= 0");
    if (wins.sum() <= 0) throw Error("Bradley-Terry: no wins recorded");

    Matrix games = wins + wins.transpose();
    games.diagonal().setZero();
    auto comps = components(games);
    if (comps.size() > 1) {
        std::string msg = "Bradley-Terry: comparison graph is disconnected; components:";
        for (const auto& c : comps) {
            msg += " {";
            for (size_t k = 0; k < c.size(); ++k) msg += (k ? "," : "") + std::to_string(c[k]);
            msg += "}";
        }
        throw Error(msg);
    }

    BradleyTerryResult res;
    Vector total_wins = wins.rowwise().sum() - wins.diagonal();
    for (Eigen::Index i = 0; i < n; ++i)
        if (total_wins(i) == 0) res.zero_win_items.push_back(static_cast<size_t>(i));

    Vector pi = Vector::Constant(n, 1.0 / static_cast<double>(n));
    for (size_t it = 1; it <= max_iterations; ++it) {
        Vector next(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double denom = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i == j || games(i, j) == 0) continue;
                double s = pi(i) + pi(j);
                if (s > 0) denom += games(i, j) / s;
            }
            next(i) = denom > 0 ? total_wins(i) / denom : 0.0;
        }
        next /= next.sum();
        double change = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double scale = std::max(std::abs(pi(i)), std::abs(next(i)));
            if (scale > 0) change = std::max(change, std::abs(next(i) - pi(i)) / scale);
        }
        pi = next;
        res.iterations = it;
        if (change < tolerance) {
            res.converged = true;
            break;
        }
    }
    res.strengths.assign(pi.data(), pi.data() + n);
    return res;
}

double bradley_terry_log_likelihood(const Matrix& wins, const std::vector<double>& strengths) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < wins.rows(); ++i) {
        for (Eigen::Index j = 0; j < wins.cols(); ++j) {
            if (i == j || wins(i, j) == 0) continue;
            double pi = strengths[static_cast<size_t>(i)], pj = strengths[static_cast<size_t>(j)];
            ll += wins(i, j) * (std::log(pi) - std::log(pi + pj));
        }
    }
    return ll;
}

MethodWins method_wins(const std::vector<ComparisonRecord>& records) {
    std::set<std::string> names;
    for (const auto& r : records) {
        names.insert(r.method1);
        names.insert(r.method2);
    }
    MethodWins mw;
    mw.methods.assign(names.begin(), names.end());
    std::map<std::string, Eigen::Index> index;
    for (size_t i = 0; i < mw.methods.size(); ++i) index[mw.methods[i]] = static_cast<Eigen::Index>(i);
    const auto n = static_cast<Eigen::Index>(mw.methods.size());
    mw.wins = Matrix::Zero(n, n);
    for (const auto& r : records) {
        if (r.method1 == r.method2) continue;
        mw.wins(index[r.method1], index[r.method2]) += static_cast<double>(r.hit1);
        mw.wins(index[r.method2], index[r.method1]) += static_cast<double>(r.hit2);
    }
    return mw;
}

}  // namespace fontpair
