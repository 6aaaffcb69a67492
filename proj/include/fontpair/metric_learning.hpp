#pragma once

#include "fontpair/common.hpp"
#include "fontpair/dataset.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fontpair {

enum class MetricVariant { ml, sml, asml };

std::string to_string(MetricVariant v);
MetricVariant parse_metric_variant(std::string_view text);

/// Linear map x -> basis * (x - mean) onto the leading principal axes.
struct Projection {
    Vector mean;
    Matrix basis;  ///< out_dim x in_dim, rows are principal axes

    Vector apply(const Vector& x) const { return basis * (x - mean); }
    size_t in_dim() const { return static_cast<size_t>(basis.cols()); }
    size_t out_dim() const { return static_cast<size_t>(basis.rows()); }
};

/// PCA fitted on the given fonts' features.
Projection fit_projection(const FeatureStore& store, const std::vector<std::string>& font_ids, size_t out_dim);

/// Learned pair scoring function.
///
///   ML:        f(x, y) = offset - (x-y)^T M (x-y)
///   SML/ASML:  f(x, y) = x^T G y - (x-y)^T M (x-y)
///
/// For SML, G is symmetric. `threshold` is the classification cut-off on
/// f, normally chosen by cross-validation on training pairs.
struct MetricModel {
    MetricVariant variant = MetricVariant::asml;
    Matrix M;
    Matrix G;
    double gamma = 1.0;
    double offset = 0.0;
    double threshold = 0.0;
    std::optional<Projection> projection;

    /// Dimension of the raw feature vectors the model accepts.
    size_t input_dim() const;
    /// Dimension of M and G.
    size_t dim() const { return static_cast<size_t>(M.rows()); }

    static MetricModel identity(MetricVariant variant, size_t dim);
};

double score_ml(const MetricModel& model, const Vector& x, const Vector& y);
double score_asml(const MetricModel& model, const Vector& x, const Vector& y);
/// Dispatches on the model variant.
double score(const MetricModel& model, const Vector& x, const Vector& y);

/// +1 iff score >= threshold.
int classify(const MetricModel& model, const Vector& x, const Vector& y, double threshold);
int classify(const MetricModel& model, const Vector& x, const Vector& y);

enum class LearningRateSchedule { constant, inverse_sqrt };

struct TrainConfig {
    double learning_rate = 1e-3;
    LearningRateSchedule schedule = LearningRateSchedule::inverse_sqrt;  ///< decays per epoch
    size_t epochs = 20;
    size_t batch_size = 64;  ///< 0 means full batch
    std::uint64_t seed = 0;
    bool psd_projection = false;
    bool multiplicity_weighting = true;
    size_t projection_dim = 0;  ///< 0 disables the PCA pre-projection
};

/// Pair features laid out row-wise, after the optional projection.
struct TrainingSet {
    Matrix X;        ///< P x d header features
    Matrix Y;        ///< P x d follower features
    Vector labels;   ///< +1 / -1
    Vector weights;  ///< per-pair hinge weight

    size_t size() const { return static_cast<size_t>(X.rows()); }
    size_t dim() const { return static_cast<size_t>(X.cols()); }
};

TrainingSet build_training_set(const std::vector<LabeledPair>& pairs, const FeatureStore& store,
                               bool multiplicity_weighting, const Projection* projection = nullptr);

/// sum_k w_k (1 - y_k f(x_k, y_k))_+ + gamma/2 (|M-I|_F^2 + |G-I|_F^2)
double asml_objective(const TrainingSet& data, const Matrix& M, const Matrix& G, double gamma);

struct ObjectiveGradient {
    double value = 0.0;
    Matrix grad_M;
    Matrix grad_G;
};

/// Objective and a subgradient (the hinge contributes only where 1 - y f > 0).
ObjectiveGradient asml_gradient(const TrainingSet& data, const Matrix& M, const Matrix& G, double gamma);

struct TrainLog {
    double initial_objective = 0.0;
    std::vector<double> epoch_objective;
    double final_objective = 0.0;
};

/// Trains ASML (or SML when `symmetric_G`) from M = G = I and returns the
/// iterate with the lowest objective seen, so the result never scores worse
/// than the initialisation.
MetricModel train_asml(const std::vector<LabeledPair>& pairs, const FeatureStore& store, const TrainConfig& cfg,
                       double gamma, bool symmetric_G, TrainLog* log = nullptr);

/// Lower-level entry used by train_asml; trains directly on a TrainingSet.
MetricModel train_asml(const TrainingSet& data, const TrainConfig& cfg, double gamma, bool symmetric_G,
                       TrainLog* log = nullptr);

/// sum over positive pairs of (x-y)^T M (x-y)
double ml_objective(const TrainingSet& data, const Matrix& M);
/// sum over negative pairs of (x-y)^T M (x-y); feasible when >= 1
double ml_constraint(const TrainingSet& data, const Matrix& M);

/// Conventional metric learning:
///   min sum_S |x-y|_M^2  s.t.  M >= 0,  sum_D |x-y|_M^2 >= 1
/// Penalty method with per-iteration PSD projection; the result is rescaled
/// so the constraint holds exactly.
MetricModel train_ml(const std::vector<LabeledPair>& pairs, const FeatureStore& store, const TrainConfig& cfg,
                     TrainLog* log = nullptr);
MetricModel train_ml(const TrainingSet& data, const TrainConfig& cfg, TrainLog* log = nullptr);

/// Eigenvalue clipping at zero.
Matrix project_psd(const Matrix& M);

void save_model(std::ostream& out, const MetricModel& model);
MetricModel load_model(std::istream& in);
void save_model_file(const std::string& path, const MetricModel& model);
MetricModel load_model_file(const std::string& path);

}  // namespace fontpair
