#pragma once

#include "ggclass/dataset.hpp"
#include "ggclass/graph.hpp"
#include "ggclass/numeric.hpp"
#include "ggclass/preprocessing.hpp"

#include <Eigen/Dense>

#include <json.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ggc {

enum class Architecture { chipclass_exp, chipclass_tanh, ssv_binary, ssv_multiclass };

std::string to_string(Architecture arch);
Architecture parse_architecture(const std::string& text);
inline bool is_chipclass(Architecture a) {
    return a == Architecture::chipclass_exp || a == Architecture::chipclass_tanh;
}

/// Hidden-layer responses for one query. Values sum to one once normalized.
struct ActivationVector {
    Eigen::VectorXd values;
    bool normalized = false;
};

namespace detail {

template <typename DerivedX, typename DerivedC>
Eigen::VectorXd center_distances(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedC>& centers) {
    if (centers.rows() < 1) throw std::invalid_argument("activation: no centers");
    if (x.size() != centers.cols()) throw std::invalid_argument("activation: dimension mismatch");
    Eigen::VectorXd d(centers.rows());
    for (Eigen::Index k = 0; k < centers.rows(); ++k)
        d(k) = (centers.row(k).transpose() - x.derived()).norm();
    return d;
}

/// exp(log_values - max), rescaled to sum one.
inline ActivationVector normalize_log(const Eigen::VectorXd& log_values) {
    ActivationVector out;
    out.values = (log_values.array() - log_values.maxCoeff()).exp().matrix();
    out.values /= out.values.sum();
    out.normalized = true;
    return out;
}

/// Equal share for the centers at distance zero.
inline ActivationVector coincident(const Eigen::VectorXd& dist) {
    ActivationVector out;
    out.values = (dist.array() == 0.0).cast<double>().matrix();
    out.values /= out.values.sum();
    out.normalized = true;
    return out;
}

} // namespace detail

/// Midpoint-centred activation exp(m_d^2 / |x - P_k|), m_d = max_i |x - P_i|,
/// normalized over the centers. Evaluated in the log domain since the raw
/// exponent grows without bound near a center; a query that coincides with a
/// center gets all of the weight.
template <typename DerivedX, typename DerivedC>
ActivationVector chip_activation(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedC>& centers) {
    const Eigen::VectorXd dist = detail::center_distances(x, centers);
    if ((dist.array() == 0.0).any()) return detail::coincident(dist);
    const double md = dist.maxCoeff();
    return detail::normalize_log(((md * md) / dist.array()).matrix());
}

/// d/dd of the unnormalized exp(m_d^2 / d).
inline double chip_activation_derivative(double distance, double max_distance) {
    if (!(distance > 0.0)) throw std::invalid_argument("chip_activation_derivative: distance must be positive");
    const double md2 = max_distance * max_distance;
    return -md2 * std::exp(md2 / distance) / (distance * distance);
}

template <typename DerivedX, typename DerivedC>
double chip_activation_derivative(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedC>& center,
                                  double max_distance) {
    return chip_activation_derivative((x - center).norm(), max_distance);
}

/// tanh(-d) + 1 for one center at distance d.
inline double tanh_activation_raw(double distance) { return std::tanh(-distance) + 1.0; }

/// tanh(-|x - c_k|) + 1, normalized over the centers.
///
/// 1 - tanh(d) is written as 2 / (1 + e^{2d}) and normalized from its logarithm
/// so far-away centers keep a positive share instead of rounding to zero.
template <typename DerivedX, typename DerivedC>
ActivationVector tanh_activation(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedC>& centers) {
    const Eigen::VectorXd dist = detail::center_distances(x, centers);
    Eigen::VectorXd log_raw(dist.size());
    for (Eigen::Index k = 0; k < dist.size(); ++k)
        log_raw(k) = std::log(2.0) - 2.0 * dist(k) - std::log1p(std::exp(-2.0 * dist(k)));
    return detail::normalize_log(log_raw);
}

/// One support edge as seen by the midpoint-centred classifier. The positive
/// endpoint belongs to the class with the larger id.
struct EdgeEndpoints {
    Eigen::VectorXd positive;
    Eigen::VectorXd negative;
    std::size_t positive_index = 0;
    std::size_t negative_index = 0;
    int positive_class = 1;
    int negative_class = 0;
};

/// +1 when x is closer to the positive endpoint, -1 when closer to the negative
/// one. Exact ties go to the endpoint with the smaller sample index.
template <typename DerivedX>
int chip_edge_weight(const Eigen::MatrixBase<DerivedX>& x, const EdgeEndpoints& edge) {
    const double to_pos = (x.derived() - edge.positive).squaredNorm();
    const double to_neg = (x.derived() - edge.negative).squaredNorm();
    if (to_pos < to_neg) return 1;
    if (to_neg < to_pos) return -1;
    return edge.positive_index < edge.negative_index ? 1 : -1;
}

enum class TrainingMode { pseudoinverse, gradient };
std::string to_string(TrainingMode mode);
TrainingMode parse_training_mode(const std::string& text);

struct GradientOptions {
    double step = 0.1;
    int max_epochs = 500;
    double tolerance = 1e-6;
    int max_halvings = 30;
    bool init_from_pseudoinverse = true;
};

struct TrainingTrace {
    TrainingMode mode = TrainingMode::pseudoinverse;
    std::vector<double> losses; // cross-entropy after each accepted step (gradient mode)
    int epochs = 0;
    bool converged = true;
};

struct TrainedModel {
    Architecture architecture = Architecture::ssv_binary;
    /// Midpoints (chipclass) or structural support vectors (ssv), one per row,
    /// in preprocessed coordinates.
    Eigen::MatrixXd centers;
    std::vector<int> center_classes;   // ssv variants
    std::vector<EdgeEndpoints> edges;  // chipclass variants, aligned with centers
    Eigen::MatrixXd weights;           // (h x 1) ssv-binary, (h x c) ssv-multiclass, empty otherwise
    Preprocessing preprocessing;
    int class_count = 2;
    std::vector<std::string> class_labels;
    double sigma_used = std::numeric_limits<double>::quiet_NaN();
    std::string membership = "none";
    std::string filter_policy = "none";
    TrainingTrace trace;

    std::size_t hidden_size() const { return static_cast<std::size_t>(centers.rows()); }
};

/// Midpoint-centred binary classifier from support edges. Needs two classes.
TrainedModel fit_chipclass(const SupportStructure& support, const Dataset& train, Architecture arch);

/// SSV-centred binary classifier, output weights from least squares on +/-1 targets.
TrainedModel fit_ssv_binary(const Dataset& train, const SupportStructure& support);

/// SSV-centred softmax network, one output per class.
TrainedModel fit_multiclass(const Dataset& train, const SupportStructure& support, TrainingMode mode,
                            const GradientOptions& options = {});

/// Row i holds the normalized tanh activations of sample i over `centers`.
Eigen::MatrixXd hidden_layer(const FeatureMatrix& samples, const Eigen::MatrixXd& centers);

/// Mean softmax cross-entropy of logits H * W against integer labels.
double cross_entropy(const Eigen::MatrixXd& hidden, const Eigen::MatrixXd& weights, std::span<const int> labels);

/// Pre-sigmoid score (binary) for an already preprocessed query.
double decision_value(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& z);

/// Output logits H(z) * W (multiclass) for an already preprocessed query.
Eigen::VectorXd output_logits(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& z);

/// P(positive class | x) for the midpoint-centred variants; `x` is raw.
double chipclass_predict(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

Eigen::VectorXd predict_proba_sample(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Class probabilities for one raw sample (any column-vector expression).
template <typename Derived>
Eigen::VectorXd predict_proba(const TrainedModel& model, const Eigen::MatrixBase<Derived>& x) {
    static_assert(Derived::ColsAtCompileTime == 1, "predict_proba: expected a column vector");
    return predict_proba_sample(model, x.derived());
}

/// Class probabilities, one row per raw sample.
Eigen::MatrixXd predict_proba(const TrainedModel& model, const FeatureMatrix& x);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

} // namespace ggc
