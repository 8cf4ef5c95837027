#pragma once

#include "ggclass/dataset.hpp"
#include "ggclass/graph.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ggc {

/// exp(-|a-b|^2 / (2 sigma^2)).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar gaussian_kernel(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b,
                                          typename DerivedA::Scalar sigma) {
    using Scalar = typename DerivedA::Scalar;
    if (!(sigma > Scalar(0))) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    if (a.size() != b.size()) throw std::invalid_argument("gaussian_kernel: dimension mismatch");
    const Scalar d2 = (a - b).squaredNorm();
    return std::exp(-d2 / (Scalar(2) * sigma * sigma));
}

/// Fraction of graph neighbours of sample i that share its label.
double membership_cardinality(const GabrielGraph& graph, const Dataset& data, std::size_t i);

/// Kernel-weighted fraction of same-label neighbours of sample i.
double membership_distance(const GabrielGraph& graph, const Dataset& data, std::size_t i, double sigma);

Eigen::VectorXd memberships_cardinality(const GabrielGraph& graph, const Dataset& data);
Eigen::VectorXd memberships_distance(const GabrielGraph& graph, const Dataset& data, double sigma);

/// Per-class mean membership.
std::vector<double> class_thresholds(std::span<const double> memberships, std::span<const int> labels,
                                     int class_count);

enum class MembershipKind { cardinality, distance };

struct FilterPolicy {
    enum class Kind { none, threshold, per_class_count };
    Kind kind = Kind::threshold;
    /// Samples to drop per class (per_class_count only).
    std::vector<std::size_t> counts;

    static FilterPolicy none() { return {Kind::none, {}}; }
    static FilterPolicy threshold() { return {Kind::threshold, {}}; }
    static FilterPolicy per_class(std::vector<std::size_t> counts) {
        return {Kind::per_class_count, std::move(counts)};
    }
    std::string describe() const;
    /// Inverse of describe(): "none", "threshold", "count:R" or "count:R0/R1/...".
    static FilterPolicy parse(const std::string& text, int class_count);
    bool operator==(const FilterPolicy&) const = default;
};

/// Memberships and thresholds of one dataset under one kernel width.
struct FilterModel {
    MembershipKind kind = MembershipKind::cardinality;
    double sigma = 1.0; // unused for cardinality memberships
    Eigen::VectorXd memberships;
    std::vector<double> thresholds;
    FilterPolicy policy;
};

FilterModel make_filter_model(const GabrielGraph& graph, const Dataset& data, MembershipKind kind,
                              double sigma, FilterPolicy policy);

struct FilterResult {
    IndexList kept;
    IndexList removed;
    /// Classes that the policy would have emptied; their best sample was kept.
    std::vector<int> guarded_classes;
};

/// Applies the filter policy. Never empties a class.
FilterResult filter_samples(const Dataset& data, const FilterModel& filter);

/// CSV columns: sample_index,class,q,q_d,threshold,removed_flag. `threshold` is the
/// class threshold of the membership kind used by `filter`.
void write_membership_report(std::ostream& out, const GabrielGraph& graph, const Dataset& data,
                             const FilterModel& filter, const FilterResult& result);

} // namespace ggc
