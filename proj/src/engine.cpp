#include "fontpair/engine.hpp"

#include "fontpair/similarity.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace fontpair {

void EngineSnapshot::validate() const {
    for (const auto& h : train.headers())
        if (!headers.contains(h)) throw NotFoundError("snapshot: training header '" + h + "' has no features");
    for (const auto& f : train.followers())
        if (!followers.contains(f)) throw NotFoundError("snapshot: training follower '" + f + "' has no features");
    if (!headers.empty() && !followers.empty() && headers.dim() != followers.dim())
        throw Error("snapshot: header and follower features differ in dimension");
    for (const auto& [variant, model] : models) {
        if (model.variant != variant) throw Error("snapshot: model stored under the wrong variant");
        if (!headers.empty() && model.input_dim() != headers.dim())
            throw Error("snapshot: " + to_string(variant) + " model dimension does not match the features");
    }
    dsknn.validate();
}

// ---------------------------------------------------------------- snapshot files

namespace {

constexpr const char* kSnapshotMagic = "fontpair-snapshot";

std::string crc_hex(const std::string& body) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

void write_ids(std::ostream& out, const char* tag, const FeatureStore& store) {
    out << tag << ' ' << store.size() << ' ' << store.dim() << '\n';
    save_features(out, store);
}

std::string next_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line))
        if (!trim(line).empty()) return std::string(trim(line));
    throw ParseError("snapshot truncated");
}

std::vector<std::string> words(const std::string& line) {
    std::vector<std::string> out;
    for (auto w : split(line, ' '))
        if (!w.empty()) out.emplace_back(w);
    return out;
}

std::vector<std::string> expect(std::istream& in, const std::string& tag, size_t n_args) {
    auto w = words(next_line(in));
    if (w.empty() || w[0] != tag || w.size() != n_args + 1)
        throw ParseError("snapshot: expected section '" + tag + "'");
    return w;
}

FeatureStore read_store(std::istream& in, const std::string& tag) {
    auto w = expect(in, tag, 2);
    long long count = parse_int(w[1]);
    std::string block;
    for (long long i = 0; i < count; ++i) block += next_line(in) + '\n';
    std::istringstream sub(block);
    FeatureStore store = load_features(sub);
    if (static_cast<long long>(store.size()) != count) throw ParseError("snapshot: feature section size mismatch");
    return store;
}

}  // namespace

void save_snapshot(std::ostream& out, const EngineSnapshot& snapshot) {
    snapshot.validate();
    std::ostringstream body;
    body << "version " << snapshot.version << '\n';
    body << "dsknn " << snapshot.dsknn.k1 << ' ' << snapshot.dsknn.k2 << ' ' << (snapshot.dsknn.use_idf ? 1 : 0)
         << ' ' << snapshot.dsknn.n << '\n';
    body << "consim_target " << format_double(snapshot.consim_target) << '\n';
    body << "family_seed " << snapshot.family_seed << '\n';
    write_ids(body, "headers", snapshot.headers);
    write_ids(body, "followers", snapshot.followers);
    body << "pairs " << to_string(snapshot.train.role()) << ' ' << snapshot.train.records().size() << '\n';
    save_pairs(body, snapshot.train);
    body << "models " << snapshot.models.size() << '\n';
    for (const auto& [_, model] : snapshot.models) save_model(body, model);
    body << "end-snapshot\n";

    const std::string text = body.str();
    out << kSnapshotMagic << ' ' << kSnapshotFormatVersion << '\n';
    out << "crc32 " << crc_hex(text) << ' ' << text.size() << '\n';
    out << text;
}

EngineSnapshot load_snapshot(std::istream& in) {
    std::string magic;
    if (!std::getline(in, magic)) throw ParseError("snapshot: empty file");
    auto mw = words(std::string(trim(magic)));
    if (mw.size() != 2 || mw[0] != kSnapshotMagic) throw ParseError("not a snapshot file (bad header)");
    if (parse_int(mw[1]) != kSnapshotFormatVersion)
        throw ParseError("snapshot format version " + mw[1] + " is not supported (expected " +
                         std::to_string(kSnapshotFormatVersion) + ")");
    std::string check_line;
    if (!std::getline(in, check_line)) throw ParseError("snapshot truncated");
    auto cw = words(std::string(trim(check_line)));
    if (cw.size() != 3 || cw[0] != "crc32") throw ParseError("snapshot: missing checksum line");
    const auto length = static_cast<size_t>(parse_int(cw[2]));

    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (body.size() < length) throw ParseError("snapshot truncated: expected " + std::to_string(length) + " bytes");
    body.resize(length);
    if (crc_hex(body) != cw[1]) throw ParseError("snapshot checksum mismatch (file corrupted)");

    std::istringstream b(body);
    EngineSnapshot s;
    {
        std::string line = next_line(b);
        if (line.rfind("version ", 0) != 0) throw ParseError("snapshot: expected 'version'");
        s.version = line.substr(8);
    }
    auto d = expect(b, "dsknn", 4);
    s.dsknn.k1 = static_cast<size_t>(parse_int(d[1]));
    s.dsknn.k2 = static_cast<size_t>(parse_int(d[2]));
    s.dsknn.use_idf = parse_int(d[3]) != 0;
    s.dsknn.n = static_cast<size_t>(parse_int(d[4]));
    s.consim_target = parse_double(expect(b, "consim_target", 1)[1]);
    s.family_seed = static_cast<std::uint64_t>(parse_int(expect(b, "family_seed", 1)[1]));
    s.headers = read_store(b, "headers");
    s.followers = read_store(b, "followers");
    {
        auto p = expect(b, "pairs", 2);
        long long count = parse_int(p[2]);
        std::string block;
        for (long long i = 0; i < count; ++i) block += next_line(b) + '\n';
        std::istringstream sub(block);
        s.train = load_pairs(sub, parse_pair_role(p[1]));
    }
    long long n_models = parse_int(expect(b, "models", 1)[1]);
    for (long long i = 0; i < n_models; ++i) {
        MetricModel m = load_model(b);
        s.models.emplace(m.variant, std::move(m));
    }
    if (next_line(b) != "end-snapshot") throw ParseError("snapshot: missing end marker");
    s.validate();
    return s;
}

void save_snapshot_file(const std::string& path, const EngineSnapshot& snapshot) {
    // write then rename so readers never see a half-written file
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write '" + tmp + "'");
        save_snapshot(out, snapshot);
        if (!out) throw Error("failed writing '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot move snapshot into '" + path + "'");
}

EngineSnapshot load_snapshot_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open '" + path + "'");
    return load_snapshot(in);
}

// ---------------------------------------------------------------- Engine

Engine::Engine(EngineSnapshot snapshot) : snap_(std::move(snapshot)), consim_(ConsimScorer::stand_in(snap_.consim_target)) {
    snap_.validate();
    if (!snap_.train.empty()) {
        dsknn_ = std::make_unique<DsknnRecommender>(snap_.train, snap_.headers, snap_.followers, snap_.dsknn);
        popularity_ = popularity_counts(snap_.train);
    }
}

const std::vector<std::string>& Engine::method_names() {
    static const std::vector<std::string> names = {"dsknn", "asml", "sml", "ml", "popularity", "sknn", "family", "consim"};
    return names;
}

std::vector<std::string> Engine::available_methods() const {
    std::vector<std::string> out;
    for (const auto& m : method_names()) {
        if ((m == "dsknn" || m == "popularity") && snap_.train.empty()) continue;
        if ((m == "asml" || m == "sml" || m == "ml") && !snap_.models.count(parse_metric_variant(m))) continue;
        out.push_back(m);
    }
    return out;
}

const Vector& Engine::header_vector(const std::string& id) const {
    const Vector* v = snap_.headers.find(id);
    if (!v) throw NotFoundError("unknown header font '" + id + "'");
    return *v;
}

const MetricModel& Engine::model_for(const std::string& method) const {
    auto it = snap_.models.find(parse_metric_variant(method));
    if (it == snap_.models.end()) throw InvalidArgumentError("no trained " + method + " model in this snapshot");
    return it->second;
}

namespace {

void require_known(const std::string& method) {
    const auto& names = Engine::method_names();
    if (std::find(names.begin(), names.end(), method) == names.end())
        throw InvalidArgumentError("unknown method '" + method + "'");
}

}  // namespace

Ranking Engine::recommend(const std::string& header_id, const std::string& method, size_t n) const {
    require_known(method);
    if (n == 0) throw InvalidArgumentError("n must be at least 1");
    const Vector& x = header_vector(header_id);

    if (method == "dsknn") {
        if (!dsknn_) throw InvalidArgumentError("dsknn needs training pairs");
        return dsknn_->recommend(x, n);
    }
    if (method == "popularity") {
        if (snap_.train.empty()) throw InvalidArgumentError("popularity needs training pairs");
        return popularity_recommend(snap_.train, n);
    }
    if (method == "sknn") return sknn_recommend(x, snap_.followers, n);
    if (method == "family") return same_family_recommend(header_id, snap_.followers, n, snap_.family_seed);
    if (method == "consim") return consim_recommend(x, snap_.followers, n, consim_);

    const MetricModel& model = model_for(method);
    Ranking out;
    out.reserve(snap_.followers.size());
    for (size_t j = 0; j < snap_.followers.size(); ++j)
        out.push_back({snap_.followers.id(j), fontpair::score(model, x, snap_.followers.vector(j))});
    std::sort(out.begin(), out.end(), ranks_before);
    if (out.size() > n) out.resize(n);
    return out;
}

double Engine::score(const std::string& header_id, const std::string& follower_id, const std::string& method) const {
    require_known(method);
    const Vector& x = header_vector(header_id);
    const Vector* y = snap_.followers.find(follower_id);
    if (!y) throw NotFoundError("unknown follower font '" + follower_id + "'");

    if (method == "dsknn") {
        if (!dsknn_) throw InvalidArgumentError("dsknn needs training pairs");
        return dsknn_->score(x, follower_id);
    }
    if (method == "popularity") {
        auto it = popularity_.find(follower_id);
        return it == popularity_.end() ? 0.0 : static_cast<double>(it->second);
    }
    if (method == "sknn") return cosine(x, *y);
    if (method == "family") return family_name(header_id) == family_name(follower_id) ? 1.0 : 0.0;
    if (method == "consim") return consim_.score(x, *y);
    return fontpair::score(model_for(method), x, *y);
}

}  // namespace fontpair
