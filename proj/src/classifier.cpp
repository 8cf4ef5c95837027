#include "ggclass/classifier.hpp"

#include "ggclass/errors.hpp"

#include <fstream>
#include <stdexcept>

namespace ggc {

std::string to_string(Architecture arch) {
    switch (arch) {
    case Architecture::chipclass_exp: return "chipclass-exp";
    case Architecture::chipclass_tanh: return "chipclass-tanh";
    case Architecture::ssv_binary: return "ssv-binary";
    case Architecture::ssv_multiclass: return "ssv-multiclass";
    }
    return "unknown";
}

Architecture parse_architecture(const std::string& text) {
    if (text == "chipclass-exp") return Architecture::chipclass_exp;
    if (text == "chipclass-tanh") return Architecture::chipclass_tanh;
    if (text == "ssv-binary") return Architecture::ssv_binary;
    if (text == "ssv-multiclass") return Architecture::ssv_multiclass;
    throw std::invalid_argument("unknown architecture '" + text + "'");
}

std::string to_string(TrainingMode mode) {
    return mode == TrainingMode::gradient ? "gradient" : "pseudoinverse";
}

TrainingMode parse_training_mode(const std::string& text) {
    if (text == "pseudoinverse") return TrainingMode::pseudoinverse;
    if (text == "gradient") return TrainingMode::gradient;
    throw std::invalid_argument("unknown training mode '" + text + "'");
}

namespace {

Eigen::MatrixXd ssv_centers(const SupportStructure& support, std::vector<int>& classes) {
    const Eigen::Index n = support.ssvs.front().center.size();
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(support.ssvs.size()), n);
    classes.clear();
    for (std::size_t k = 0; k < support.ssvs.size(); ++k) {
        centers.row(static_cast<Eigen::Index>(k)) = support.ssvs[k].center.transpose();
        classes.push_back(support.ssvs[k].label);
    }
    return centers;
}

TrainedModel base_model(const Dataset& train, Architecture arch) {
    TrainedModel model;
    model.architecture = arch;
    model.class_count = train.class_count();
    model.class_labels = train.class_names();
    model.preprocessing = Preprocessing::identity(train.dim());
    return model;
}

void require_binary(const Dataset& train, const char* who) {
    if (train.class_count() != 2) throw std::invalid_argument(std::string(who) + ": needs exactly two classes");
}

void require_ssvs(const SupportStructure& support, const char* who) {
    if (support.ssvs.size() < 2) throw std::invalid_argument(std::string(who) + ": needs at least two SSVs");
}

} // namespace

TrainedModel fit_chipclass(const SupportStructure& support, const Dataset& train, Architecture arch) {
    if (!is_chipclass(arch)) throw std::invalid_argument("fit_chipclass: not a chipclass architecture");
    require_binary(train, "fit_chipclass");
    if (support.edges.empty()) throw std::invalid_argument("fit_chipclass: empty support structure");

    TrainedModel model = base_model(train, arch);
    const Eigen::Index n = support.edges.front().midpoint.size();
    model.centers.resize(static_cast<Eigen::Index>(support.edges.size()), n);
    for (std::size_t k = 0; k < support.edges.size(); ++k) {
        const SupportEdge& e = support.edges[k];
        model.centers.row(static_cast<Eigen::Index>(k)) = e.midpoint.transpose();
        const bool j_positive = e.class_j > e.class_k;
        const std::size_t pos = j_positive ? e.j : e.k;
        const std::size_t neg = j_positive ? e.k : e.j;
        EdgeEndpoints ep;
        ep.positive = Eigen::Map<const Eigen::VectorXd>(train.row_ptr(pos), n);
        ep.negative = Eigen::Map<const Eigen::VectorXd>(train.row_ptr(neg), n);
        ep.positive_index = pos;
        ep.negative_index = neg;
        ep.positive_class = train.label(pos);
        ep.negative_class = train.label(neg);
        model.edges.push_back(std::move(ep));
    }
    return model;
}

Eigen::MatrixXd hidden_layer(const FeatureMatrix& samples, const Eigen::MatrixXd& centers) {
    if (samples.cols() != centers.cols()) throw std::invalid_argument("hidden_layer: dimension mismatch");
    if (centers.rows() < 1) throw std::invalid_argument("hidden_layer: no centers");
    Eigen::MatrixXd h(samples.rows(), centers.rows());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < samples.rows(); ++i)
        h.row(i) = tanh_activation(samples.row(i).transpose(), centers).values.transpose();
    return h;
}

TrainedModel fit_ssv_binary(const Dataset& train, const SupportStructure& support) {
    require_binary(train, "fit_ssv_binary");
    require_ssvs(support, "fit_ssv_binary");
    TrainedModel model = base_model(train, Architecture::ssv_binary);
    model.centers = ssv_centers(support, model.center_classes);

    LeastSquaresProblem<double> problem;
    problem.design = hidden_layer(train.features(), model.centers);
    problem.targets.resize(static_cast<Eigen::Index>(train.size()), 1);
    for (std::size_t i = 0; i < train.size(); ++i)
        problem.targets(static_cast<Eigen::Index>(i), 0) = train.label(i) == 1 ? 1.0 : -1.0;
    model.weights = solve_least_squares(problem);
    if (!model.weights.allFinite()) throw NumericalError("fit_ssv_binary: non-finite output weights");
    return model;
}

double cross_entropy(const Eigen::MatrixXd& hidden, const Eigen::MatrixXd& weights, std::span<const int> labels) {
    const Eigen::MatrixXd logits = hidden * weights;
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const Eigen::VectorXd row = logits.row(i).transpose();
        total += log_sum_exp(row) - row(labels[static_cast<std::size_t>(i)]);
    }
    return total / static_cast<double>(logits.rows());
}

TrainedModel fit_multiclass(const Dataset& train, const SupportStructure& support, TrainingMode mode,
                            const GradientOptions& options) {
    if (train.class_count() < 2) throw std::invalid_argument("fit_multiclass: needs at least two classes");
    require_ssvs(support, "fit_multiclass");
    TrainedModel model = base_model(train, Architecture::ssv_multiclass);
    model.centers = ssv_centers(support, model.center_classes);
    model.trace.mode = mode;

    const Eigen::MatrixXd h = hidden_layer(train.features(), model.centers);
    const auto m = h.rows();
    const auto c = static_cast<Eigen::Index>(train.class_count());
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(m, c);
    for (Eigen::Index i = 0; i < m; ++i) onehot(i, train.label(static_cast<std::size_t>(i))) = 1.0;

    if (mode == TrainingMode::pseudoinverse || options.init_from_pseudoinverse) {
        model.weights = solve_least_squares(LeastSquaresProblem<double>{h, onehot});
    } else {
        model.weights = Eigen::MatrixXd::Zero(h.cols(), c);
    }

    if (mode == TrainingMode::gradient) {
        const auto& labels = train.labels();
        double loss = cross_entropy(h, model.weights, labels);
        model.trace.losses.push_back(loss);
        model.trace.converged = false;
        for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
            model.trace.epochs = epoch + 1;
            const Eigen::MatrixXd probs = softmax_rows(h * model.weights);
            const Eigen::MatrixXd grad = h.transpose() * (probs - onehot) / static_cast<double>(m);
            double step = options.step;
            bool accepted = false;
            Eigen::MatrixXd candidate;
            double candidate_loss = loss;
            for (int halving = 0; halving <= options.max_halvings; ++halving, step *= 0.5) {
                candidate = model.weights - step * grad;
                candidate_loss = cross_entropy(h, candidate, labels);
                if (candidate_loss <= loss) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                // No step decreased the loss.
                model.trace.converged = true;
                break;
            }
            const double improvement = loss - candidate_loss;
            model.weights = std::move(candidate);
            loss = candidate_loss;
            model.trace.losses.push_back(loss);
            if (improvement < options.tolerance) {
                model.trace.converged = true;
                break;
            }
        }
    }
    if (!model.weights.allFinite()) throw NumericalError("fit_multiclass: non-finite output weights");
    return model;
}

double decision_value(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& z) {
    switch (model.architecture) {
    case Architecture::chipclass_exp:
    case Architecture::chipclass_tanh: {
        if (model.edges.size() != model.hidden_size())
            throw std::invalid_argument("decision_value: chipclass model without edge endpoints");
        const ActivationVector act = model.architecture == Architecture::chipclass_exp
                                         ? chip_activation(z, model.centers)
                                         : tanh_activation(z, model.centers);
        double score = 0.0;
        for (std::size_t k = 0; k < model.edges.size(); ++k)
            score += chip_edge_weight(z, model.edges[k]) * act.values(static_cast<Eigen::Index>(k));
        return score;
    }
    case Architecture::ssv_binary: {
        if (model.weights.rows() != model.centers.rows() || model.weights.cols() != 1)
            throw std::invalid_argument("decision_value: ssv-binary model lacks an (h x 1) weight vector");
        return tanh_activation(z, model.centers).values.dot(model.weights.col(0));
    }
    case Architecture::ssv_multiclass: break;
    }
    throw std::invalid_argument("decision_value: multiclass models have one logit per class");
}

Eigen::VectorXd output_logits(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (model.architecture != Architecture::ssv_multiclass)
        throw std::invalid_argument("output_logits: not a multiclass model");
    if (model.weights.rows() != model.centers.rows() || model.weights.cols() != model.class_count)
        throw std::invalid_argument("output_logits: model lacks an (h x c) weight matrix");
    return model.weights.transpose() * tanh_activation(z, model.centers).values;
}

double chipclass_predict(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (!is_chipclass(model.architecture)) throw std::invalid_argument("chipclass_predict: not a chipclass model");
    return stable_sigmoid(decision_value(model, model.preprocessing.apply(x)));
}

Eigen::VectorXd predict_proba_sample(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
    const Eigen::VectorXd z = model.preprocessing.apply(x);
    if (model.architecture == Architecture::ssv_multiclass) return softmax(output_logits(model, z));
    const double p = stable_sigmoid(decision_value(model, z));
    Eigen::VectorXd out(2);
    out << 1.0 - p, p;
    return out;
}

Eigen::MatrixXd predict_proba(const TrainedModel& model, const FeatureMatrix& x) {
    if (x.cols() != model.preprocessing.input_dim)
        throw std::invalid_argument("predict_proba: expected " + std::to_string(model.preprocessing.input_dim) +
                                    " features, got " + std::to_string(x.cols()));
    if (x.rows() > 0) (void)predict_proba_sample(model, x.row(0).transpose());
    Eigen::MatrixXd out(x.rows(), model.class_count);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = predict_proba_sample(model, x.row(i).transpose()).transpose();
    return out;
}

// ---------------------------------------------------------------------------
// JSON model files

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols_if_empty = 0) {
    if (j.empty()) return Eigen::MatrixXd(0, cols_if_empty);
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != cols) throw DataError("model file: ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json endpoint_json(std::size_t index, int cls, const Eigen::VectorXd& point) {
    return {{"index", index}, {"class", cls}, {"point", vector_to_json(point)}};
}

} // namespace

nlohmann::json model_to_json(const TrainedModel& model) {
    json doc;
    doc["architecture"] = to_string(model.architecture);
    doc["centers"] = matrix_to_json(model.centers);
    if (is_chipclass(model.architecture)) {
        json edges = json::array();
        for (const auto& e : model.edges)
            edges.push_back({{"alpha", endpoint_json(e.positive_index, e.positive_class, e.positive)},
                             {"beta", endpoint_json(e.negative_index, e.negative_class, e.negative)}});
        doc["center_classes"] = std::move(edges);
        doc["weights"] = nullptr;
    } else {
        doc["center_classes"] = model.center_classes;
        doc["weights"] = matrix_to_json(model.weights);
    }
    json feature_indices = json::array();
    for (Eigen::Index d : model.preprocessing.feature_indices) feature_indices.push_back(d);
    doc["preprocessing"] = {{"means", vector_to_json(model.preprocessing.means)},
                            {"stds", vector_to_json(model.preprocessing.stds)},
                            {"input_dim", model.preprocessing.input_dim},
                            {"feature_indices", std::move(feature_indices)}};
    doc["class_labels"] = model.class_labels;
    doc["sigma_used"] = std::isnan(model.sigma_used) ? json(nullptr) : json(model.sigma_used);
    doc["membership"] = model.membership;
    doc["filter_policy"] = model.filter_policy;
    doc["training"] = {{"mode", to_string(model.trace.mode)},
                       {"epochs", model.trace.epochs},
                       {"converged", model.trace.converged}};
    return doc;
}

TrainedModel model_from_json(const nlohmann::json& doc) {
    try {
        TrainedModel model;
        model.architecture = parse_architecture(doc.at("architecture").get<std::string>());
        model.class_labels = doc.at("class_labels").get<std::vector<std::string>>();
        model.class_count = static_cast<int>(model.class_labels.size());

        const json& pre = doc.at("preprocessing");
        model.preprocessing.means = vector_from_json(pre.at("means"));
        model.preprocessing.stds = vector_from_json(pre.at("stds"));
        model.preprocessing.input_dim = pre.at("input_dim").get<Eigen::Index>();
        model.preprocessing.feature_indices = pre.at("feature_indices").get<std::vector<Eigen::Index>>();
        const auto dim = model.preprocessing.output_dim();
        if (model.preprocessing.means.size() != dim || model.preprocessing.stds.size() != dim)
            throw DataError("model file: preprocessing sizes disagree");
        if ((model.preprocessing.stds.array() <= 0.0).any()) throw DataError("model file: non-positive stddev");

        model.centers = matrix_from_json(doc.at("centers"), dim);
        if (model.centers.rows() < 1 || model.centers.cols() != dim)
            throw DataError("model file: centers do not match preprocessing dimension");

        if (is_chipclass(model.architecture)) {
            for (const json& e : doc.at("center_classes")) {
                EdgeEndpoints ep;
                ep.positive_index = e.at("alpha").at("index").get<std::size_t>();
                ep.positive_class = e.at("alpha").at("class").get<int>();
                ep.positive = vector_from_json(e.at("alpha").at("point"));
                ep.negative_index = e.at("beta").at("index").get<std::size_t>();
                ep.negative_class = e.at("beta").at("class").get<int>();
                ep.negative = vector_from_json(e.at("beta").at("point"));
                model.edges.push_back(std::move(ep));
            }
            if (model.edges.size() != model.hidden_size()) throw DataError("model file: one edge per center required");
        } else {
            model.center_classes = doc.at("center_classes").get<std::vector<int>>();
            model.weights = matrix_from_json(doc.at("weights"));
            const Eigen::Index outputs = model.architecture == Architecture::ssv_binary ? 1 : model.class_count;
            if (model.weights.rows() != model.centers.rows() || model.weights.cols() != outputs)
                throw DataError("model file: weight matrix has the wrong shape");
            if (!model.weights.allFinite()) throw DataError("model file: non-finite weights");
        }
        if (!doc.at("sigma_used").is_null()) model.sigma_used = doc.at("sigma_used").get<double>();
        model.membership = doc.value("membership", "none");
        model.filter_policy = doc.value("filter_policy", "none");
        if (doc.contains("training")) {
            const json& t = doc.at("training");
            model.trace.mode = parse_training_mode(t.value("mode", "pseudoinverse"));
            model.trace.epochs = t.value("epochs", 0);
            model.trace.converged = t.value("converged", true);
        }
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
}

void save_model(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file " + path);
    out << model_to_json(model).dump(2) << '\n';
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file " + path + ": " + e.what());
    }
    return model_from_json(doc);
}

} // namespace ggc
