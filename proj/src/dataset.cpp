#include "ggclass/dataset.hpp"

#include "ggclass/errors.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace ggc {

Dataset::Dataset(FeatureMatrix features, LabelVector labels, int class_count,
                 std::vector<std::string> class_names, std::vector<std::string> feature_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      class_count_(class_count),
      class_names_(std::move(class_names)),
      feature_names_(std::move(feature_names)) {
    if (static_cast<std::size_t>(features_.rows()) != labels_.size())
        throw DataError("dataset: " + std::to_string(features_.rows()) + " feature rows but " +
                        std::to_string(labels_.size()) + " labels");
    if (class_count_ < 1) throw DataError("dataset: class count must be positive");
    if (!features_.allFinite()) {
        for (Eigen::Index i = 0; i < features_.rows(); ++i)
            for (Eigen::Index j = 0; j < features_.cols(); ++j)
                if (!std::isfinite(features_(i, j)))
                    throw DataError("dataset: non-finite feature at row " + std::to_string(i) +
                                    ", column " + std::to_string(j));
    }
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] < 0 || labels_[i] >= class_count_)
            throw DataError("dataset: label " + std::to_string(labels_[i]) + " at row " +
                            std::to_string(i) + " outside [0, " + std::to_string(class_count_) + ")");
    if (class_names_.empty()) {
        for (int c = 0; c < class_count_; ++c) class_names_.push_back(std::to_string(c));
    } else if (static_cast<int>(class_names_.size()) != class_count_) {
        throw DataError("dataset: class name count does not match class count");
    }

    const auto dups = find_duplicate_rows(features_);
    if (!dups.empty()) {
        std::ostringstream msg;
        msg << "dataset: duplicate feature rows";
        const std::size_t shown = std::min<std::size_t>(dups.size(), 10);
        for (std::size_t d = 0; d < shown; ++d)
            msg << (d ? ", " : " ") << "(" << dups[d].first << ", " << dups[d].second << ")";
        if (dups.size() > shown) msg << " and " << dups.size() - shown << " more";
        throw DataError(msg.str());
    }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    FeatureMatrix sub(static_cast<Eigen::Index>(indices.size()), features_.cols());
    LabelVector sub_labels;
    sub_labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= size()) throw std::out_of_range("dataset subset: index out of range");
        sub.row(static_cast<Eigen::Index>(r)) = features_.row(static_cast<Eigen::Index>(indices[r]));
        sub_labels.push_back(labels_[indices[r]]);
    }
    return Dataset(std::move(sub), std::move(sub_labels), class_count_, class_names_, feature_names_);
}

std::vector<std::size_t> Dataset::class_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(class_count_), 0);
    for (int y : labels_) ++sizes[static_cast<std::size_t>(y)];
    return sizes;
}

void Dataset::require_all_classes() const {
    const auto sizes = class_sizes();
    for (std::size_t c = 0; c < sizes.size(); ++c)
        if (sizes[c] == 0) throw DataError("dataset: class '" + class_names_[c] + "' has no samples");
}

std::vector<std::pair<std::size_t, std::size_t>> find_duplicate_rows(const FeatureMatrix& features) {
    const auto m = static_cast<std::size_t>(features.rows());
    const Eigen::Index n = features.cols();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto row_less = [&](std::size_t a, std::size_t b) {
        for (Eigen::Index d = 0; d < n; ++d) {
            const double x = features(static_cast<Eigen::Index>(a), d);
            const double y = features(static_cast<Eigen::Index>(b), d);
            if (x < y) return true;
            if (y < x) return false;
        }
        return a < b;
    };
    std::sort(order.begin(), order.end(), row_less);

    std::vector<std::pair<std::size_t, std::size_t>> dups;
    for (std::size_t r = 1; r < m; ++r) {
        const auto a = static_cast<Eigen::Index>(order[r - 1]);
        const auto b = static_cast<Eigen::Index>(order[r]);
        if ((features.row(a).array() == features.row(b).array()).all())
            dups.emplace_back(std::min(order[r - 1], order[r]), std::max(order[r - 1], order[r]));
    }
    std::sort(dups.begin(), dups.end());
    return dups;
}

} // namespace ggc
