#pragma once

#include "ggclass/dataset.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace ggc {

/// Per-feature z-score fitted on a training split. Zero-variance columns are
/// dropped; `feature_indices` lists the raw columns that survive.
struct Preprocessing {
    Eigen::Index input_dim = 0;
    std::vector<Eigen::Index> feature_indices;
    Eigen::VectorXd means;
    Eigen::VectorXd stds;
    std::vector<std::string> dropped_features;

    Eigen::Index output_dim() const { return static_cast<Eigen::Index>(feature_indices.size()); }

    /// Pass-through transform for data that is already on a common scale.
    static Preprocessing identity(Eigen::Index dim);

    Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& raw) const;
    FeatureMatrix apply(const FeatureMatrix& raw) const;
    Dataset apply(const Dataset& raw) const;
};

/// Statistics from `train` (needs at least two rows). Throws DataError if every
/// feature is constant.
Preprocessing fit_preprocessing(const Dataset& train);

/// z-scores `train` and `apply_to` with the statistics of `train`.
std::pair<Dataset, Preprocessing> standardize(const Dataset& train, const Dataset& apply_to);

} // namespace ggc
