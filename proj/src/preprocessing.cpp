#include "ggclass/preprocessing.hpp"

#include "ggclass/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace ggc {

Preprocessing Preprocessing::identity(Eigen::Index dim) {
    Preprocessing p;
    p.input_dim = dim;
    for (Eigen::Index d = 0; d < dim; ++d) p.feature_indices.push_back(d);
    p.means = Eigen::VectorXd::Zero(dim);
    p.stds = Eigen::VectorXd::Ones(dim);
    return p;
}

Eigen::VectorXd Preprocessing::apply(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    if (raw.size() != input_dim)
        throw std::invalid_argument("preprocessing: expected " + std::to_string(input_dim) + " features, got " +
                                    std::to_string(raw.size()));
    Eigen::VectorXd z(output_dim());
    for (Eigen::Index d = 0; d < output_dim(); ++d)
        z(d) = (raw(feature_indices[static_cast<std::size_t>(d)]) - means(d)) / stds(d);
    return z;
}

FeatureMatrix Preprocessing::apply(const FeatureMatrix& raw) const {
    if (raw.cols() != input_dim)
        throw std::invalid_argument("preprocessing: expected " + std::to_string(input_dim) + " features, got " +
                                    std::to_string(raw.cols()));
    FeatureMatrix z(raw.rows(), output_dim());
    for (Eigen::Index i = 0; i < raw.rows(); ++i)
        for (Eigen::Index d = 0; d < output_dim(); ++d)
            z(i, d) = (raw(i, feature_indices[static_cast<std::size_t>(d)]) - means(d)) / stds(d);
    return z;
}

Dataset Preprocessing::apply(const Dataset& raw) const {
    std::vector<std::string> names;
    if (!raw.feature_names().empty())
        for (Eigen::Index d : feature_indices) names.push_back(raw.feature_names()[static_cast<std::size_t>(d)]);
    return Dataset(apply(raw.features()), raw.labels(), raw.class_count(), raw.class_names(), std::move(names));
}

Preprocessing fit_preprocessing(const Dataset& train) {
    if (train.size() < 2) throw DataError("standardize: need at least two training rows");
    const FeatureMatrix& x = train.features();
    const auto m = static_cast<double>(x.rows());
    Preprocessing p;
    p.input_dim = x.cols();
    std::vector<double> means;
    std::vector<double> stds;
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
        const double mean = x.col(d).sum() / m;
        const double var = (x.col(d).array() - mean).square().sum() / m;
        const double sd = std::sqrt(var);
        if (!(sd > 0.0)) {
            p.dropped_features.push_back(train.feature_names().empty()
                                             ? "column " + std::to_string(d)
                                             : train.feature_names()[static_cast<std::size_t>(d)]);
            continue;
        }
        p.feature_indices.push_back(d);
        means.push_back(mean);
        stds.push_back(sd);
    }
    if (p.feature_indices.empty()) throw DataError("standardize: every feature has zero variance");
    p.means = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
    p.stds = Eigen::Map<Eigen::VectorXd>(stds.data(), static_cast<Eigen::Index>(stds.size()));
    return p;
}

std::pair<Dataset, Preprocessing> standardize(const Dataset& train, const Dataset& apply_to) {
    Preprocessing p = fit_preprocessing(train);
    return {p.apply(apply_to), std::move(p)};
}

} // namespace ggc
