#include "fontpair/pair_extraction.hpp"

#include <cmath>
#include <istream>
#include <map>

namespace fontpair {

void ExtractionConfig::validate() const {
    if (!(subheader_distance_threshold > 0)) throw Error("sub-header distance threshold must be positive");
    if (body_min_chars < 1) throw Error("body character threshold must be positive");
}

double box_distance(const TextBox& a, const TextBox& b, DistanceMode mode) {
    const double dy = a.bbox.cy() - b.bbox.cy();
    if (mode == DistanceMode::vertical) return std::abs(dy);
    return std::hypot(a.bbox.cx() - b.bbox.cx(), dy);
}

namespace {

bool earlier_in_reading_order(const std::vector<TextBox>& page, size_t a, size_t b) {
    const auto& ba = page[a].bbox;
    const auto& bb = page[b].bbox;
    if (ba.y0 != bb.y0) return ba.y0 < bb.y0;
    if (ba.x0 != bb.x0) return ba.x0 < bb.x0;
    return a < b;
}

// "a is a larger box than b": font size, then area, then reading order
bool larger(const std::vector<TextBox>& page, size_t a, size_t b) {
    if (page[a].font_size != page[b].font_size) return page[a].font_size > page[b].font_size;
    if (page[a].bbox.area() != page[b].bbox.area()) return page[a].bbox.area() > page[b].bbox.area();
    return earlier_in_reading_order(page, a, b);
}

}  // namespace

std::optional<size_t> detect_header(const std::vector<TextBox>& page, const ExtractionConfig& cfg) {
    if (page.empty() || page.size() < cfg.min_boxes_per_page) return std::nullopt;
    size_t best = 0;
    for (size_t i = 1; i < page.size(); ++i)
        if (larger(page, i, best)) best = i;
    return best;
}

std::optional<size_t> detect_subheader(const std::vector<TextBox>& page, size_t header, const ExtractionConfig& cfg) {
    std::optional<size_t> best;
    for (size_t i = 0; i < page.size(); ++i) {
        if (i == header) continue;
        if (box_distance(page[i], page[header], cfg.distance_mode) > cfg.subheader_distance_threshold) continue;
        if (!best || larger(page, i, *best)) best = i;
    }
    return best;
}

std::optional<std::pair<std::string, std::string>> detect_body_pair(const std::vector<TextBox>& page, size_t header,
                                                                    const ExtractionConfig& cfg) {
    std::optional<size_t> best;
    double best_dist = 0;
    for (size_t i = 0; i < page.size(); ++i) {
        if (i == header || page[i].char_count < cfg.body_min_chars) continue;
        double d = box_distance(page[i], page[header], DistanceMode::euclidean);
        if (!best || d < best_dist || (d == best_dist && earlier_in_reading_order(page, i, *best))) {
            best = i;
            best_dist = d;
        }
    }
    if (!best) return std::nullopt;
    return std::make_pair(page[header].font_id, page[*best].font_id);
}

ExtractionResult extract_pairs(const std::vector<Document>& documents, const ExtractionConfig& cfg) {
    cfg.validate();
    ExtractionResult out;
    auto& diag = out.diagnostics;
    std::vector<PairRecord> body, sub;
    for (const auto& doc : documents) {
        ++diag.documents;
        bool have_subheader = false;
        for (const auto& page : doc.pages) {
            ++diag.pages;
            auto header = detect_header(page.boxes, cfg);
            if (!header) {
                ++diag.pages_skipped;
                diag.messages.push_back("skipped page " + doc.doc_id + "/" + page.page_id + ": " +
                                        std::to_string(page.boxes.size()) + " text box(es), need " +
                                        std::to_string(cfg.min_boxes_per_page));
                continue;
            }
            if (auto pair = detect_body_pair(page.boxes, *header, cfg)) body.push_back({pair->first, pair->second, 1});
            if (!have_subheader) {
                if (auto s = detect_subheader(page.boxes, *header, cfg)) {
                    sub.push_back({page.boxes[*header].font_id, page.boxes[*s].font_id, 1});
                    have_subheader = true;
                }
            }
        }
    }
    out.header_body = PairDataset(PairRole::header_body, std::move(body));
    out.header_subheader = PairDataset(PairRole::header_subheader, std::move(sub));
    return out;
}

PageRecords load_page_records(std::istream& in) {
    PageRecords out;
    std::map<std::string, size_t> doc_index;
    std::map<std::pair<size_t, std::string>, size_t> page_index;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        try {
            auto f = split(t, '\t');
            if (f.size() != 6) throw ParseError("expected 6 tab-separated fields");
            auto coords = split(f[4], ',');
            if (coords.size() != 4) throw ParseError("bounding box needs 4 coordinates");
            TextBox box;
            box.page_id = std::string(trim(f[1]));
            box.font_id = std::string(trim(f[2]));
            box.font_size = parse_double(f[3]);
            box.bbox = {parse_double(coords[0]), parse_double(coords[1]), parse_double(coords[2]), parse_double(coords[3])};
            box.char_count = parse_int(f[5]);
            if (box.font_id.empty()) throw ParseError("empty font id");
            if (!(box.font_size > 0) || !std::isfinite(box.font_size)) throw ParseError("font size must be positive");
            if (!(box.bbox.x0 < box.bbox.x1 && box.bbox.y0 < box.bbox.y1)) throw ParseError("degenerate bounding box");
            if (box.char_count < 0) throw ParseError("negative character count");

            std::string doc_id(trim(f[0]));
            auto [dit, new_doc] = doc_index.try_emplace(doc_id, out.documents.size());
            if (new_doc) out.documents.push_back({doc_id, {}});
            auto& doc = out.documents[dit->second];
            auto [pit, new_page] = page_index.try_emplace({dit->second, box.page_id}, doc.pages.size());
            if (new_page) doc.pages.push_back({box.page_id, {}});
            doc.pages[pit->second].boxes.push_back(std::move(box));
        } catch (const ParseError& e) {
            ++out.malformed_records;
            out.messages.push_back("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

ExtractionResult extract_pairs(std::istream& page_records, const ExtractionConfig& cfg) {
    PageRecords recs = load_page_records(page_records);
    ExtractionResult out = extract_pairs(recs.documents, cfg);
    out.diagnostics.malformed_records = recs.malformed_records;
    out.diagnostics.messages.insert(out.diagnostics.messages.begin(), recs.messages.begin(), recs.messages.end());
    return out;
}

}  // namespace fontpair
