#pragma once

#include "fontpair/common.hpp"
#include "fontpair/dataset.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fontpair {

/// Axis-aligned box in page coordinates with the origin at the top-left,
/// so y grows down the page.
struct BBox {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    double area() const { return (x1 - x0) * (y1 - y0); }
    double cx() const { return 0.5 * (x0 + x1); }
    double cy() const { return 0.5 * (y0 + y1); }
};

/// A run of words on one line sharing font and size.
struct TextBox {
    std::string page_id;
    std::string font_id;
    double font_size = 0;
    BBox bbox;
    long long char_count = 0;
};

enum class DistanceMode { euclidean, vertical };

struct ExtractionConfig {
    double subheader_distance_threshold = 150.0;
    long long body_min_chars = 100;
    size_t min_boxes_per_page = 2;
    DistanceMode distance_mode = DistanceMode::euclidean;

    void validate() const;
};

/// Distance between box centres under the configured mode.
double box_distance(const TextBox& a, const TextBox& b, DistanceMode mode);

/// Index of the header box: largest font size, then larger area, then
/// earliest in reading order. Empty when the page has too few boxes.
std::optional<size_t> detect_header(const std::vector<TextBox>& page, const ExtractionConfig& cfg);

/// Largest non-header box whose centre lies within the threshold of the header's.
std::optional<size_t> detect_subheader(const std::vector<TextBox>& page, size_t header, const ExtractionConfig& cfg);

/// (header font, body font) using the nearest non-header box with at least
/// body_min_chars characters.
std::optional<std::pair<std::string, std::string>> detect_body_pair(const std::vector<TextBox>& page, size_t header,
                                                                    const ExtractionConfig& cfg);

struct Page {
    std::string page_id;
    std::vector<TextBox> boxes;  ///< file order
};

struct Document {
    std::string doc_id;
    std::vector<Page> pages;  ///< first-appearance order
};

struct ExtractionDiagnostics {
    size_t documents = 0;
    size_t pages = 0;
    size_t pages_skipped = 0;
    size_t malformed_records = 0;
    std::vector<std::string> messages;  ///< one line per skipped page or record
};

struct ExtractionResult {
    PairDataset header_body{PairRole::header_body, {}};
    PairDataset header_subheader{PairRole::header_subheader, {}};
    ExtractionDiagnostics diagnostics;
};

/// At most one header/body pair per page and one header/sub-header pair
/// per document (its first page that yields one).
ExtractionResult extract_pairs(const std::vector<Document>& documents, const ExtractionConfig& cfg);

struct PageRecords {
    std::vector<Document> documents;
    size_t malformed_records = 0;
    std::vector<std::string> messages;
};

/// Parses `doc_id<TAB>page_id<TAB>font_id<TAB>font_size<TAB>x0,y0,x1,y1<TAB>char_count`
/// lines; malformed lines are skipped and reported.
PageRecords load_page_records(std::istream& in);

ExtractionResult extract_pairs(std::istream& page_records, const ExtractionConfig& cfg);

}  // namespace fontpair
