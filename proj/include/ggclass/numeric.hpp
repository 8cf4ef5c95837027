#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ggc {

/// Logistic function, finite for any finite input.
template <typename Scalar>
Scalar stable_sigmoid(Scalar z) {
    if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
    const Scalar e = std::exp(z);
    return e / (Scalar(1) + e);
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
    using Scalar = typename Derived::Scalar;
    const Scalar top = v.maxCoeff();
    if (!std::isfinite(top)) return top;
    return top + std::log((v.array() - top).exp().sum());
}

/// Softmax of a logit vector (max-shifted).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& logits) {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = (logits.array() - logits.maxCoeff()).exp().matrix();
    out /= out.sum();
    return out;
}

/// Row-wise softmax of a logit matrix.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) out.row(i) = softmax(logits.row(i).transpose()).transpose();
    return out;
}

template <typename Scalar>
struct LeastSquaresProblem {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Matrix design;  // H, one row per sample
    Matrix targets; // Y, one column per output
    Scalar rank_tolerance = Scalar(1e-10);
};

/// Minimum-norm least-squares solution W of design * W ~= targets.
///
/// Singular values at or below rank_tolerance * (largest singular value) are
/// treated as zero, so rank-deficient designs give the pseudoinverse solution.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> solve_least_squares(const LeastSquaresProblem<Scalar>& problem) {
    const auto& h = problem.design;
    const auto& y = problem.targets;
    if (h.rows() < 1 || h.cols() < 1 || y.cols() < 1)
        throw std::invalid_argument("solve_least_squares: empty design or targets");
    if (h.rows() != y.rows()) throw std::invalid_argument("solve_least_squares: row count mismatch");
    if (!h.allFinite() || !y.allFinite())
        throw std::invalid_argument("solve_least_squares: non-finite entries");
    if (!(problem.rank_tolerance >= Scalar(0)))
        throw std::invalid_argument("solve_least_squares: negative rank tolerance");

    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Eigen::BDCSVD<Matrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(problem.rank_tolerance);
    return svd.solve(y);
}

/// Area under the ROC curve via the Mann-Whitney statistic, ties counted half.
/// Returns std::nullopt when either class is missing.
std::optional<double> auc_binary(std::span<const double> scores, std::span<const int> positive);

/// Hand & Till macro one-vs-one AUC over all class pairs.
/// `probabilities` is (samples x classes). std::nullopt when a class is missing.
std::optional<double> roc_auc_ovo(const Eigen::MatrixXd& probabilities, std::span<const int> labels);

struct MetricReport {
    std::vector<double> per_fold;
    double mean = 0.0;
    double stddev = 0.0; // population standard deviation across folds
};

MetricReport summarize(std::vector<double> per_fold);

} // namespace ggc
