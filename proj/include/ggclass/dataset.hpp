#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ggc {

/// Samples are stored one per row, rows contiguous.
template <typename Scalar>
using SampleMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using FeatureMatrix = SampleMatrix<double>;
using LabelVector = std::vector<int>;
using IndexList = std::vector<std::size_t>;

/// Sequential sum of squared coordinate differences.
///
/// Every graph routine goes through this one function so that a pair's
/// distance is bit-identical no matter which builder computed it.
template <typename Scalar>
inline Scalar squared_distance(const Scalar* a, const Scalar* b, Eigen::Index n) {
    Scalar acc = 0;
    for (Eigen::Index d = 0; d < n; ++d) {
        const Scalar diff = a[d] - b[d];
        acc += diff * diff;
    }
    return acc;
}

template <typename Scalar>
inline Scalar squared_distance(std::span<const Scalar> a, std::span<const Scalar> b) {
    return squared_distance(a.data(), b.data(), static_cast<Eigen::Index>(a.size()));
}

/// Labelled feature matrix with class ids in [0, class_count).
///
/// Construction validates: matching sizes, finite features, labels in range
/// and pairwise-distinct rows. Class presence is a separate check
/// (require_all_classes) because subsets legitimately lose classes in tests.
class Dataset {
public:
    Dataset() = default;
    Dataset(FeatureMatrix features, LabelVector labels, int class_count,
            std::vector<std::string> class_names = {},
            std::vector<std::string> feature_names = {});

    const FeatureMatrix& features() const { return features_; }
    const LabelVector& labels() const { return labels_; }
    int label(std::size_t i) const { return labels_[i]; }
    int class_count() const { return class_count_; }
    std::size_t size() const { return labels_.size(); }
    Eigen::Index dim() const { return features_.cols(); }
    const std::vector<std::string>& class_names() const { return class_names_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    std::span<const double> row(std::size_t i) const {
        return {features_.data() + static_cast<Eigen::Index>(i) * features_.cols(),
                static_cast<std::size_t>(features_.cols())};
    }
    const double* row_ptr(std::size_t i) const {
        return features_.data() + static_cast<Eigen::Index>(i) * features_.cols();
    }

    /// Rows listed in `indices`, in that order. Class bookkeeping is kept.
    Dataset subset(std::span<const std::size_t> indices) const;

    /// Number of samples per class id.
    std::vector<std::size_t> class_sizes() const;

    /// Throws DataError naming the first class id without samples.
    void require_all_classes() const;

private:
    FeatureMatrix features_;
    LabelVector labels_;
    int class_count_ = 0;
    std::vector<std::string> class_names_;
    std::vector<std::string> feature_names_;
};

/// Pairs (i, j), i < j, of identical feature rows. Empty when all rows are distinct.
std::vector<std::pair<std::size_t, std::size_t>> find_duplicate_rows(const FeatureMatrix& features);

} // namespace ggc
