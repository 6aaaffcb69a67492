#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fontpair {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a font id, header or file entry cannot be resolved.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Raised for a request that is well-formed but names an unknown or
/// unavailable method, or carries an out-of-range argument.
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

/// Raised on malformed input files or arguments.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A follower font with its score, as returned by every recommender.
struct ScoredFont {
    std::string font_id;
    double score = 0.0;

    bool operator==(const ScoredFont&) const = default;
};

using Ranking = std::vector<ScoredFont>;

/// Orders by score descending, then font id ascending.
inline bool ranks_before(const ScoredFont& a, const ScoredFont& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.font_id < b.font_id;
}

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Strict parse of a full decimal token; throws ParseError.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

}  // namespace fontpair
