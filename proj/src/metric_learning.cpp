#include "fontpair/metric_learning.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

namespace fontpair {

std::string to_string(MetricVariant v) {
    switch (v) {
        case MetricVariant::ml: return "ml";
        case MetricVariant::sml: return "sml";
        case MetricVariant::asml: return "asml";
    }
    return "?";
}

MetricVariant parse_metric_variant(std::string_view text) {
    if (text == "ml") return MetricVariant::ml;
    if (text == "sml") return MetricVariant::sml;
    if (text == "asml") return MetricVariant::asml;
    throw ParseError("unknown metric variant '" + std::string(text) + "'");
}

// ---------------------------------------------------------------- projection

Projection fit_projection(const FeatureStore& store, const std::vector<std::string>& font_ids, size_t out_dim) {
    if (font_ids.empty()) throw Error("projection: no fonts to fit on");
    const auto d = static_cast<Eigen::Index>(store.dim());
    if (out_dim == 0 || static_cast<Eigen::Index>(out_dim) > d)
        throw Error("projection: output dimension must lie in [1, " + std::to_string(d) + "]");

    Matrix data(static_cast<Eigen::Index>(font_ids.size()), d);
    for (size_t i = 0; i < font_ids.size(); ++i) data.row(static_cast<Eigen::Index>(i)) = store.at(font_ids[i]).transpose();
    Projection p;
    p.mean = data.colwise().mean().transpose();
    Matrix centered = data.rowwise() - p.mean.transpose();
    Matrix cov = centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(font_ids.size()) - 1.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    // eigenvalues ascend; keep the trailing columns, largest first
    p.basis.resize(static_cast<Eigen::Index>(out_dim), d);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(out_dim); ++k)
        p.basis.row(k) = eig.eigenvectors().col(d - 1 - k).transpose();
    return p;
}

// ---------------------------------------------------------------- scoring

size_t MetricModel::input_dim() const { return projection ? projection->in_dim() : dim(); }

MetricModel MetricModel::identity(MetricVariant variant, size_t dim) {
    MetricModel m;
    m.variant = variant;
    const auto n = static_cast<Eigen::Index>(dim);
    m.M = Matrix::Identity(n, n);
    m.G = Matrix::Identity(n, n);
    return m;
}

namespace {

void check_dims(const MetricModel& model, const Vector& x, const Vector& y) {
    const auto d = static_cast<Eigen::Index>(model.input_dim());
    if (x.size() != d || y.size() != d)
        throw Error("metric model expects dimension " + std::to_string(d) + ", got " + std::to_string(x.size()) +
                    " and " + std::to_string(y.size()));
}

double quad_distance(const Matrix& M, const Vector& x, const Vector& y) {
    Vector diff = x - y;
    return diff.dot(M * diff);
}

}  // namespace

double score_ml(const MetricModel& model, const Vector& x, const Vector& y) {
    if (model.variant != MetricVariant::ml) throw Error("score_ml requires an ML model");
    check_dims(model, x, y);
    if (model.projection) return model.offset - quad_distance(model.M, model.projection->apply(x), model.projection->apply(y));
    return model.offset - quad_distance(model.M, x, y);
}

double score_asml(const MetricModel& model, const Vector& x, const Vector& y) {
    if (model.variant == MetricVariant::ml) throw Error("score_asml requires an SML or ASML model");
    check_dims(model, x, y);
    if (model.projection) {
        Vector px = model.projection->apply(x);
        Vector py = model.projection->apply(y);
        return px.dot(model.G * py) - quad_distance(model.M, px, py);
    }
    return x.dot(model.G * y) - quad_distance(model.M, x, y);
}

double score(const MetricModel& model, const Vector& x, const Vector& y) {
    return model.variant == MetricVariant::ml ? score_ml(model, x, y) : score_asml(model, x, y);
}

int classify(const MetricModel& model, const Vector& x, const Vector& y, double threshold) {
    return score(model, x, y) >= threshold ? 1 : -1;
}

int classify(const MetricModel& model, const Vector& x, const Vector& y) {
    return classify(model, x, y, model.threshold);
}

// ---------------------------------------------------------------- objective

TrainingSet build_training_set(const std::vector<LabeledPair>& pairs, const FeatureStore& store,
                               bool multiplicity_weighting, const Projection* projection) {
    const auto n = static_cast<Eigen::Index>(pairs.size());
    const auto d = static_cast<Eigen::Index>(projection ? projection->out_dim() : store.dim());
    TrainingSet ts;
    ts.X.resize(n, d);
    ts.Y.resize(n, d);
    ts.labels.resize(n);
    ts.weights.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& p = pairs[static_cast<size_t>(k)];
        if (p.label != 1 && p.label != -1) throw Error("labels must be +1 or -1");
        const Vector& x = store.at(p.header_id);
        const Vector& y = store.at(p.follower_id);
        ts.X.row(k) = (projection ? projection->apply(x) : x).transpose();
        ts.Y.row(k) = (projection ? projection->apply(y) : y).transpose();
        ts.labels(k) = p.label;
        ts.weights(k) = multiplicity_weighting ? static_cast<double>(p.count) : 1.0;
    }
    return ts;
}

namespace {

// f_k for the selected rows
Vector pair_scores(const Matrix& X, const Matrix& Y, const Matrix& M, const Matrix& G) {
    Matrix D = X - Y;
    return (X * G).cwiseProduct(Y).rowwise().sum() - (D * M).cwiseProduct(D).rowwise().sum();
}

double regularizer(const Matrix& M, const Matrix& G) {
    const auto n = M.rows();
    return (M - Matrix::Identity(n, n)).squaredNorm() + (G - Matrix::Identity(n, n)).squaredNorm();
}

// Hinge part only: sum of w_k (1 - y_k f_k)_+ and its subgradient over the given rows.
double hinge_terms(const Matrix& X, const Matrix& Y, const Vector& labels, const Vector& weights, const Matrix& M,
                   const Matrix& G, Matrix* grad_M, Matrix* grad_G) {
    Vector f = pair_scores(X, Y, M, G);
    Vector margin = Vector::Ones(f.size()) - labels.cwiseProduct(f);
    Vector coef = Vector::Zero(f.size());
    double loss = 0.0;
    for (Eigen::Index k = 0; k < f.size(); ++k) {
        if (std::isnan(margin(k))) {  // let the caller see the blowup
            if (grad_M && grad_G) {
                grad_M->setConstant(M.rows(), M.cols(), margin(k));
                grad_G->setConstant(G.rows(), G.cols(), margin(k));
            }
            return margin(k);
        }
        if (margin(k) > 0.0) {
            loss += weights(k) * margin(k);
            coef(k) = weights(k) * labels(k);
        }
    }
    if (grad_M && grad_G) {
        Matrix D = X - Y;
        // d/dG of -(y f) = -y x y^T ; d/dM of -(y f) = +y d d^T
        *grad_G = -(X.transpose() * coef.asDiagonal() * Y);
        *grad_M = D.transpose() * coef.asDiagonal() * D;
    }
    return loss;
}

}  // namespace

double asml_objective(const TrainingSet& data, const Matrix& M, const Matrix& G, double gamma) {
    double hinge = data.size() ? hinge_terms(data.X, data.Y, data.labels, data.weights, M, G, nullptr, nullptr) : 0.0;
    return hinge + 0.5 * gamma * regularizer(M, G);
}

ObjectiveGradient asml_gradient(const TrainingSet& data, const Matrix& M, const Matrix& G, double gamma) {
    ObjectiveGradient out;
    const auto n = M.rows();
    if (data.size()) {
        out.value = hinge_terms(data.X, data.Y, data.labels, data.weights, M, G, &out.grad_M, &out.grad_G);
    } else {
        out.grad_M = Matrix::Zero(n, n);
        out.grad_G = Matrix::Zero(n, n);
    }
    out.value += 0.5 * gamma * regularizer(M, G);
    out.grad_M += gamma * (M - Matrix::Identity(n, n));
    out.grad_G += gamma * (G - Matrix::Identity(n, n));
    return out;
}

Matrix project_psd(const Matrix& M) {
    Matrix sym = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    Vector vals = eig.eigenvalues().cwiseMax(0.0);
    Matrix out = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

// ---------------------------------------------------------------- ASML / SML training

namespace {

double epoch_rate(const TrainConfig& cfg, size_t epoch) {
    if (cfg.schedule == LearningRateSchedule::constant) return cfg.learning_rate;
    return cfg.learning_rate / std::sqrt(static_cast<double>(epoch));
}

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw Error("training needs at least one epoch");
    if (!(cfg.learning_rate > 0.0)) throw Error("learning rate must be positive");
}

Matrix rows_of(const Matrix& m, const std::vector<Eigen::Index>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
}

Vector entries_of(const Vector& v, const std::vector<Eigen::Index>& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
    return out;
}

}  // namespace

MetricModel train_asml(const TrainingSet& data, const TrainConfig& cfg, double gamma, bool symmetric_G,
                       TrainLog* log) {
    validate(cfg);
    if (!(gamma > 0.0)) throw Error("gamma must be positive");
    const auto d = static_cast<Eigen::Index>(data.dim());
    MetricModel model = MetricModel::identity(symmetric_G ? MetricVariant::sml : MetricVariant::asml, data.dim());
    model.gamma = gamma;

    const double initial = asml_objective(data, model.M, model.G, gamma);
    if (log) {
        log->initial_objective = initial;
        log->epoch_objective.clear();
        log->final_objective = initial;
    }
    const size_t n_pairs = data.size();
    if (n_pairs == 0) return model;  // the regulariser alone is minimised at the identity

    // Steps are taken on objective / n_pairs so the rate does not depend on
    // the data size; the regulariser is applied as its exact proximal map.
    const double reg = gamma / static_cast<double>(n_pairs);
    const size_t batch = cfg.batch_size == 0 ? n_pairs : std::min(cfg.batch_size, n_pairs);
    const Matrix I = Matrix::Identity(d, d);

    std::vector<Eigen::Index> order(n_pairs);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);

    Matrix M = model.M, G = model.G;
    Matrix best_M = M, best_G = G;
    double best = initial;
    Matrix grad_M, grad_G;

    for (size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double eta = epoch_rate(cfg, epoch);
        if (batch < n_pairs) std::shuffle(order.begin(), order.end(), rng);
        for (size_t start = 0; start < n_pairs; start += batch) {
            const size_t stop = std::min(start + batch, n_pairs);
            std::vector<Eigen::Index> idx(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(stop));
            const double scale = 1.0 / static_cast<double>(idx.size());
            if (idx.size() == n_pairs) {
                hinge_terms(data.X, data.Y, data.labels, data.weights, M, G, &grad_M, &grad_G);
            } else {
                hinge_terms(rows_of(data.X, idx), rows_of(data.Y, idx), entries_of(data.labels, idx),
                            entries_of(data.weights, idx), M, G, &grad_M, &grad_G);
            }
            M -= eta * scale * grad_M;
            G -= eta * scale * grad_G;
            const double shrink = 1.0 / (1.0 + eta * reg);
            M = shrink * (M + eta * reg * I);
            G = shrink * (G + eta * reg * I);
            M = (0.5 * (M + M.transpose())).eval();
            if (symmetric_G) G = (0.5 * (G + G.transpose())).eval();
        }
        if (cfg.psd_projection) M = project_psd(M);

        const double obj = asml_objective(data, M, G, gamma);
        if (!std::isfinite(obj))
            throw Error("training diverged at epoch " + std::to_string(epoch) + " (learning rate " +
                        format_double(eta) + "); lower the learning rate");
        if (log) log->epoch_objective.push_back(obj);
        if (obj <= best) {
            best = obj;
            best_M = M;
            best_G = G;
        }
    }
    model.M = std::move(best_M);
    model.G = std::move(best_G);
    if (log) log->final_objective = best;
    return model;
}

MetricModel train_asml(const std::vector<LabeledPair>& pairs, const FeatureStore& store, const TrainConfig& cfg,
                       double gamma, bool symmetric_G, TrainLog* log) {
    std::optional<Projection> proj;
    if (cfg.projection_dim > 0) {
        std::vector<std::string> ids;
        for (const auto& p : pairs) {
            ids.push_back(p.header_id);
            ids.push_back(p.follower_id);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        proj = fit_projection(store, ids, cfg.projection_dim);
    }
    TrainingSet data = build_training_set(pairs, store, cfg.multiplicity_weighting, proj ? &*proj : nullptr);
    MetricModel model = train_asml(data, cfg, gamma, symmetric_G, log);
    model.projection = std::move(proj);
    return model;
}

// ---------------------------------------------------------------- ML training

double ml_objective(const TrainingSet& data, const Matrix& M) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < data.X.rows(); ++k) {
        if (data.labels(k) < 0) continue;
        Vector diff = (data.X.row(k) - data.Y.row(k)).transpose();
        total += data.weights(k) * diff.dot(M * diff);
    }
    return total;
}

double ml_constraint(const TrainingSet& data, const Matrix& M) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < data.X.rows(); ++k) {
        if (data.labels(k) > 0) continue;
        Vector diff = (data.X.row(k) - data.Y.row(k)).transpose();
        total += diff.dot(M * diff);
    }
    return total;
}

MetricModel train_ml(const TrainingSet& data, const TrainConfig& cfg, TrainLog* log) {
    validate(cfg);
    const auto d = static_cast<Eigen::Index>(data.dim());

    // Both sums are linear in M: sum_S = <M, A_S>, sum_D = <M, A_D>.
    Matrix A_S = Matrix::Zero(d, d), A_D = Matrix::Zero(d, d);
    size_t n_neg = 0;
    for (Eigen::Index k = 0; k < data.X.rows(); ++k) {
        Vector diff = (data.X.row(k) - data.Y.row(k)).transpose();
        if (data.labels(k) > 0) {
            A_S += data.weights(k) * diff * diff.transpose();
        } else {
            A_D += diff * diff.transpose();
            ++n_neg;
        }
    }
    if (n_neg == 0) throw Error("metric learning needs at least one negative pair");
    const double ad_norm = A_D.norm();
    if (ad_norm == 0.0) throw Error("metric learning is infeasible: every negative pair joins identical points");

    MetricModel model = MetricModel::identity(MetricVariant::ml, data.dim());
    Matrix M = model.M;
    auto penalised = [&](const Matrix& m, double mu) {
        double slack = std::max(0.0, 1.0 - (m.cwiseProduct(A_D)).sum());
        return (m.cwiseProduct(A_S)).sum() + 0.5 * mu * slack * slack;
    };
    if (log) {
        log->initial_objective = (M.cwiseProduct(A_S)).sum();
        log->epoch_objective.clear();
    }

    // Penalty continuation: each stage raises mu tenfold and runs cfg.epochs
    // projected gradient steps with step 1/L for the current stage.
    double mu = 1.0;
    constexpr int kStages = 8;
    for (int stage = 0; stage < kStages; ++stage, mu *= 10.0) {
        const double step = 1.0 / (A_S.norm() + mu * ad_norm * ad_norm);
        for (size_t it = 0; it < cfg.epochs; ++it) {
            double slack = std::max(0.0, 1.0 - (M.cwiseProduct(A_D)).sum());
            Matrix grad = A_S - mu * slack * A_D;
            M = project_psd(M - step * grad);
            if (!M.allFinite()) throw Error("metric learning diverged");
        }
        if (log) log->epoch_objective.push_back(penalised(M, mu));
    }

    double c = (M.cwiseProduct(A_D)).sum();
    if (c <= 0.0) {
        // collapsed onto the null space of A_D; restart from the top eigenvector direction
        Eigen::SelfAdjointEigenSolver<Matrix> eig(A_D);
        Vector v = eig.eigenvectors().col(d - 1);
        M = v * v.transpose();
        c = (M.cwiseProduct(A_D)).sum();
    }
    M /= c;  // constraint holds with equality
    M = (0.5 * (M + M.transpose())).eval();

    model.M = M;
    // decision offset halfway between the mean positive and mean negative distance
    size_t n_pos = data.size() - n_neg;
    double mean_neg = ml_constraint(data, M) / static_cast<double>(n_neg);
    double mean_pos = 0.0;
    if (n_pos) {
        double wsum = 0.0;
        for (Eigen::Index k = 0; k < data.labels.size(); ++k)
            if (data.labels(k) > 0) wsum += data.weights(k);
        mean_pos = ml_objective(data, M) / wsum;
    }
    model.offset = 0.5 * (mean_pos + mean_neg);
    if (log) log->final_objective = ml_objective(data, M);
    return model;
}

MetricModel train_ml(const std::vector<LabeledPair>& pairs, const FeatureStore& store, const TrainConfig& cfg,
                     TrainLog* log) {
    std::optional<Projection> proj;
    if (cfg.projection_dim > 0) {
        std::vector<std::string> ids;
        for (const auto& p : pairs) {
            ids.push_back(p.header_id);
            ids.push_back(p.follower_id);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        proj = fit_projection(store, ids, cfg.projection_dim);
    }
    TrainingSet data = build_training_set(pairs, store, cfg.multiplicity_weighting, proj ? &*proj : nullptr);
    MetricModel model = train_ml(data, cfg, log);
    model.projection = std::move(proj);
    return model;
}

// ---------------------------------------------------------------- model files

namespace {

void write_matrix(std::ostream& out, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << ' ';
            out << format_double(m(r, c));
        }
        out << '\n';
    }
}

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::string next() {
        std::string line;
        while (std::getline(in_, line)) {
            auto t = trim(line);
            if (!t.empty()) return std::string(t);
        }
        throw ParseError("model file truncated");
    }

    std::string expect_key(const std::string& key) {
        std::string line = next();
        auto sp = line.find(' ');
        if (line.substr(0, sp) != key) throw ParseError("model file: expected '" + key + "', got '" + line + "'");
        return sp == std::string::npos ? std::string() : std::string(trim(std::string_view(line).substr(sp + 1)));
    }

    Vector row(Eigen::Index n) {
        std::string line = next();
        std::vector<std::string_view> tokens;
        for (auto tok : split(line, ' '))
            if (!tok.empty()) tokens.push_back(tok);
        if (static_cast<Eigen::Index>(tokens.size()) != n)
            throw ParseError("model file: expected " + std::to_string(n) + " values per row");
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = parse_double(tokens[static_cast<size_t>(i)]);
        return v;
    }

    Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = row(cols).transpose();
        return m;
    }

private:
    std::istream& in_;
};

constexpr const char* kModelMagic = "fontpair-model 1";

}  // namespace

void save_model(std::ostream& out, const MetricModel& model) {
    out << kModelMagic << '\n';
    out << "variant " << to_string(model.variant) << '\n';
    out << "dim " << model.dim() << '\n';
    out << "gamma " << format_double(model.gamma) << '\n';
    out << "offset " << format_double(model.offset) << '\n';
    out << "threshold " << format_double(model.threshold) << '\n';
    if (model.projection) {
        out << "projection " << model.projection->in_dim() << '\n';
        out << "mean\n";
        write_matrix(out, model.projection->mean.transpose());
        out << "basis\n";
        write_matrix(out, model.projection->basis);
    } else {
        out << "projection 0\n";
    }
    out << "M\n";
    write_matrix(out, model.M);
    out << "G\n";
    write_matrix(out, model.G);
    out << "end-model\n";
}

MetricModel load_model(std::istream& in) {
    LineReader r(in);
    if (r.next() != kModelMagic) throw ParseError("not a model file (bad header)");
    MetricModel m;
    m.variant = parse_metric_variant(r.expect_key("variant"));
    long long dim = parse_int(r.expect_key("dim"));
    if (dim < 1) throw ParseError("model file: dimension must be positive");
    m.gamma = parse_double(r.expect_key("gamma"));
    m.offset = parse_double(r.expect_key("offset"));
    m.threshold = parse_double(r.expect_key("threshold"));
    long long in_dim = parse_int(r.expect_key("projection"));
    if (in_dim > 0) {
        Projection p;
        r.expect_key("mean");
        p.mean = r.row(in_dim);
        r.expect_key("basis");
        p.basis = r.matrix(dim, in_dim);
        m.projection = std::move(p);
    }
    r.expect_key("M");
    m.M = r.matrix(dim, dim);
    r.expect_key("G");
    m.G = r.matrix(dim, dim);
    r.expect_key("end-model");
    return m;
}

void save_model_file(const std::string& path, const MetricModel& model) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    save_model(out, model);
}

MetricModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open '" + path + "'");
    return load_model(in);
}

}  // namespace fontpair
