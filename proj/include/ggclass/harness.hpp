#pragma once

#include "ggclass/classifier.hpp"
#include "ggclass/dataset.hpp"
#include "ggclass/graph.hpp"
#include "ggclass/numeric.hpp"
#include "ggclass/preprocessing.hpp"
#include "ggclass/regularization.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ggc {

// ---------------------------------------------------------------------------
// Data ingestion

/// Reads a headed CSV. Every column except `label_column` must be numeric;
/// labels are mapped to 0..c-1 (numeric order when all labels are integers,
/// lexicographic otherwise). Missing cells and duplicate rows are errors.
Dataset load_csv(const std::string& path, const std::string& label_column);
Dataset parse_csv(std::istream& in, const std::string& label_column, const std::string& source = "<stream>");

/// Reads only numeric feature columns, skipping `label_column` when present.
/// Returns the matrix in file column order.
FeatureMatrix load_feature_csv(const std::string& path, const std::string& label_column,
                               std::vector<std::string>* feature_names = nullptr);

// ---------------------------------------------------------------------------
// Cross-validation

struct Fold {
    IndexList train;
    IndexList test;
};

/// Stratified k-fold split of `labels`; each class is shuffled with `seed` and
/// dealt round-robin so per-class fold counts differ by at most one.
std::vector<Fold> stratified_kfold(std::span<const int> labels, int class_count, int k, std::uint64_t seed);
std::vector<Fold> stratified_kfold(const Dataset& data, int k, std::uint64_t seed);

struct SearchSpace {
    double sigma_low = 0.1;
    double sigma_high = 10.0;
    int sigma_grid = 20;   // log-spaced points including both bounds
    int sigma_draws = 0;   // > 0 replaces the grid with seeded log-uniform draws
    std::vector<std::size_t> filter_counts{0, 1, 2, 5, 10};
    double filter_count_cap = 0.2; // fraction of a class that may be removed

    std::vector<double> sigmas(std::uint64_t seed) const;
};

struct ExperimentConfig {
    std::string dataset_path;
    std::string label_column = "class";
    Architecture architecture = Architecture::ssv_binary;
    MembershipKind membership = MembershipKind::distance;
    FilterPolicy::Kind filter = FilterPolicy::Kind::threshold;
    SearchSpace search;
    int outer_folds = 5;
    int inner_folds = 5;
    std::uint64_t seed = 0;
    TrainingMode mode = TrainingMode::pseudoinverse;
    GradientOptions gradient;

    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Standardized training split and its witness-counting Gabriel graph, shared
/// by every hyperparameter candidate evaluated on that split.
struct PreparedSplit {
    Preprocessing preprocessing;
    Dataset train;
    GabrielGraph graph;
};

PreparedSplit prepare_split(const Dataset& raw_train);

struct PipelineOptions {
    Architecture architecture = Architecture::ssv_binary;
    MembershipKind membership = MembershipKind::distance;
    double sigma = 1.0;
    FilterPolicy policy = FilterPolicy::threshold();
    TrainingMode mode = TrainingMode::pseudoinverse;
    GradientOptions gradient;
};

struct PipelineFit {
    TrainedModel model;
    IndexList kept;                  // rows of the prepared training split
    std::size_t removed = 0;
    std::size_t support_edges = 0;
    std::size_t ssv_count = 0;
    std::vector<int> guarded_classes;
    bool support_fallback = false;   // filtering left no support edge; unfiltered support used
};

/// membership -> filter -> graph recomputation -> support extraction -> fit.
PipelineFit fit_pipeline(const PreparedSplit& split, const PipelineOptions& options);

/// Convenience wrapper: standardize raw data, build the graph and fit.
PipelineFit train_model(const Dataset& raw, const PipelineOptions& options);

/// Binary AUC on the positive-class column, or one-vs-one AUC for c > 2.
double evaluate_model(const TrainedModel& model, const Dataset& raw_test);

struct FoldResult {
    std::size_t fold = 0;
    double metric = 0.0;
    double metric_class0_positive = 0.0; // binary only: AUC with class 0 as the positive class
    double inner_score = 0.0;
    double sigma = 0.0;        // NaN for cardinality memberships
    std::string filter;
    std::size_t n_ssv = 0;
    std::size_t support_edges = 0;
    std::size_t removed = 0;
    bool support_fallback = false;
    std::size_t fallback_candidates = 0; // inner candidates that needed the fallback
};

struct CvReport {
    std::string metric_name;
    std::vector<FoldResult> folds;
    MetricReport summary;

    nlohmann::json to_json() const;
    std::string table() const;
};

/// Callback told which original-row indices each stage touched, for leakage audits.
using StageObserver =
    std::function<void(const std::string& stage, std::size_t outer_fold, std::span<const std::size_t> rows)>;

/// Nested cross-validation: outer folds for evaluation, inner folds for choosing
/// sigma and filter parameters on each outer training split only.
CvReport run_nested_cv(const Dataset& data, const ExperimentConfig& config, const StageObserver& observer = {});

// ---------------------------------------------------------------------------
// Recomputation benchmark

struct BenchmarkRecord {
    std::string dataset;
    std::size_t m = 0;
    double fraction = 0.0;
    std::vector<double> fresh_seconds;
    std::vector<double> incremental_seconds;

    double mean_fresh() const;
    double mean_incremental() const;
    double std_fresh() const;
    double std_incremental() const;
};

/// Times a fresh build on the survivors against recomputation from witness
/// counts for each removal fraction. The witness build itself is not timed.
/// Throws NumericalError if the two graphs ever differ.
std::vector<BenchmarkRecord> bench_recompute(const Dataset& data, const std::string& dataset_id,
                                             std::span<const double> removal_fractions, int repetitions,
                                             std::uint64_t seed);

/// CSV columns dataset,m,fraction,rep,method,seconds.
void write_bench_csv(std::ostream& out, std::span<const BenchmarkRecord> records);

/// Uniform random points in [0,1]^n with labels from the sign of a random
/// hyperplane through the centre. Rows are distinct with probability one.
Dataset synthetic_dataset(std::size_t m, Eigen::Index n, std::uint64_t seed);

/// Isotropic Gaussian blobs, one per class, centres spaced `separation` apart.
Dataset gaussian_blobs(std::size_t per_class, int classes, double separation, double spread, std::uint64_t seed);

} // namespace ggc
