#include "ggclass/cli.hpp"

#include "ggclass/errors.hpp"
#include "ggclass/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ggc {

namespace {

struct Globals {
    std::uint64_t seed = 0;
    int jobs = 0;
    bool quiet = false;
};

std::uint64_t default_seed() {
    if (const char* env = std::getenv("GGM_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("GGM_SEED is not an unsigned integer: ") + env);
        }
    }
    return 0;
}

/// Writes to `path`, or stdout for "" and "-".
class Output {
  public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw DataError("cannot write " + path);
        }
    }
    std::ostream& stream() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }

  private:
    std::unique_ptr<std::ofstream> file_;
};

Dataset load_input(const std::string& path, const std::string& label, bool standardize_first) {
    Dataset data = load_csv(path, label);
    if (standardize_first) data = fit_preprocessing(data).apply(data);
    return data;
}

MembershipKind parse_membership_flag(const std::string& s) {
    if (s == "distance" || s == "q_d") return MembershipKind::distance;
    if (s == "cardinality" || s == "q") return MembershipKind::cardinality;
    throw CLI::ValidationError("--membership", "expected cardinality or distance");
}

Architecture resolve_architecture(const std::string& arch, const std::string& activation) {
    if (arch == "chipclass") {
        if (activation == "exp") return Architecture::chipclass_exp;
        if (activation == "tanh") return Architecture::chipclass_tanh;
        throw CLI::ValidationError("--activation", "expected exp or tanh");
    }
    try {
        return parse_architecture(arch);
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("--arch", e.what());
    }
}

FilterPolicy parse_policy_flag(const std::string& s, int class_count) {
    try {
        return FilterPolicy::parse(s, class_count);
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("--filter-policy", e.what());
    }
}

} // namespace

int cli_dispatch(int argc, char** argv) {
    CLI::App app{"Gabriel graph classifiers with graph-based outlier filtering", "ggclass"};
    app.fallthrough();
    app.require_subcommand(1);

    Globals g;
    std::optional<std::uint64_t> seed_flag;
    app.add_option("--seed", seed_flag, "Random seed (default: $GGM_SEED or 0)");
    app.add_option("--jobs", g.jobs, "Parallel worker count (0 = runtime default)")->check(CLI::NonNegativeNumber);
    app.add_flag("--quiet", g.quiet, "Suppress progress and summaries on stderr");

    std::string input;
    std::string label = "class";
    std::string out_path;
    bool standardize_first = false;
    double sigma = 1.0;
    std::string membership = "distance";
    std::string policy_text = "threshold";

    // graph
    auto* graph_cmd = app.add_subcommand("graph", "Build the Gabriel graph and export DOT or CSV");
    bool witness = false;
    std::string format = "dot";
    graph_cmd->add_option("input", input, "CSV file")->required();
    graph_cmd->add_option("--label", label, "Label column");
    graph_cmd->add_option("--out", out_path, "Output file (default stdout)");
    graph_cmd->add_option("--format", format, "dot or csv")->check(CLI::IsMember({"dot", "csv"}));
    graph_cmd->add_flag("--witness", witness, "CSV: list every pair with its witness count");
    graph_cmd->add_flag("--standardize", standardize_first, "Z-score features first");

    // membership
    auto* membership_cmd = app.add_subcommand("membership", "Export per-sample memberships q and q_d");
    membership_cmd->add_option("input", input, "CSV file")->required();
    membership_cmd->add_option("--label", label, "Label column");
    membership_cmd->add_option("--out", out_path, "Output file (default stdout)");
    membership_cmd->add_option("--sigma", sigma, "Kernel width")->check(CLI::PositiveNumber);
    membership_cmd->add_option("--membership", membership, "Membership used for the threshold column");
    membership_cmd->add_option("--filter-policy", policy_text, "none, threshold, count:R or count:R0/R1/...");
    membership_cmd->add_flag("--standardize", standardize_first, "Z-score features first");

    // filter
    auto* filter_cmd = app.add_subcommand("filter", "Apply a filter policy and list kept/removed samples");
    filter_cmd->add_option("input", input, "CSV file")->required();
    filter_cmd->add_option("--label", label, "Label column");
    filter_cmd->add_option("--out", out_path, "Output file (default stdout)");
    filter_cmd->add_option("--sigma", sigma, "Kernel width")->check(CLI::PositiveNumber);
    filter_cmd->add_option("--membership", membership, "cardinality or distance");
    filter_cmd->add_option("--filter-policy", policy_text, "none, threshold, count:R or count:R0/R1/...");
    filter_cmd->add_flag("--standardize", standardize_first, "Z-score features first");

    // train
    auto* train_cmd = app.add_subcommand("train", "Fit a model and write it as JSON");
    std::string arch = "ssv-binary";
    std::string activation = "tanh";
    std::string mode = "pseudoinverse";
    train_cmd->add_option("input", input, "CSV file")->required();
    train_cmd->add_option("--label", label, "Label column");
    train_cmd->add_option("--out", out_path, "Model file")->required();
    train_cmd->add_option("--arch", arch, "chipclass, chipclass-exp, chipclass-tanh, ssv-binary or ssv-multiclass");
    train_cmd->add_option("--activation", activation, "exp or tanh (with --arch chipclass)");
    train_cmd->add_option("--membership", membership, "cardinality or distance");
    train_cmd->add_option("--sigma", sigma, "Kernel width")->check(CLI::PositiveNumber);
    train_cmd->add_option("--filter-policy", policy_text, "none, threshold, count:R or count:R0/R1/...");
    train_cmd->add_option("--mode", mode, "pseudoinverse or gradient (ssv-multiclass)");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Write class probabilities for a CSV");
    std::string model_path;
    predict_cmd->add_option("model", model_path, "Model JSON")->required();
    predict_cmd->add_option("input", input, "CSV file")->required();
    predict_cmd->add_option("--label", label, "Label column, ignored when absent");
    predict_cmd->add_option("--out", out_path, "Output file (default stdout)");

    // cv
    auto* cv_cmd = app.add_subcommand("cv", "Nested cross-validation");
    std::string config_path;
    std::string dataset_flag;
    std::string filter_kind = "threshold";
    int outer = 5;
    int inner = 5;
    std::string table_path;
    cv_cmd->add_option("config", config_path, "Experiment config JSON");
    cv_cmd->add_option("--data", dataset_flag, "CSV file (overrides the config)");
    cv_cmd->add_option("--label", label, "Label column");
    cv_cmd->add_option("--arch", arch, "Architecture");
    cv_cmd->add_option("--activation", activation, "exp or tanh (with --arch chipclass)");
    cv_cmd->add_option("--membership", membership, "cardinality or distance");
    cv_cmd->add_option("--filter-policy", filter_kind, "none, threshold or per-class-count")
        ->check(CLI::IsMember({"none", "threshold", "per-class-count", "count"}));
    cv_cmd->add_option("--mode", mode, "pseudoinverse or gradient");
    cv_cmd->add_option("--outer", outer, "Outer folds")->check(CLI::Range(2, 1000));
    cv_cmd->add_option("--inner", inner, "Inner folds")->check(CLI::Range(2, 1000));
    cv_cmd->add_option("--out", out_path, "JSON report (default stdout)");
    cv_cmd->add_option("--table", table_path, "Also write the text table here");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Time fresh rebuilds against witness-count recomputation");
    std::size_t bench_m = 2000;
    Eigen::Index bench_n = 4;
    std::vector<double> fractions{0.1, 0.2, 0.3};
    int reps = 5;
    bench_cmd->add_option("input", input, "CSV file (default: synthetic uniform data)");
    bench_cmd->add_option("--label", label, "Label column");
    bench_cmd->add_option("-m,--samples", bench_m, "Synthetic sample count")->check(CLI::PositiveNumber);
    bench_cmd->add_option("-n,--dim", bench_n, "Synthetic dimension")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--fractions", fractions, "Removal fractions")->delimiter(',');
    bench_cmd->add_option("--reps", reps, "Repetitions per fraction")->check(CLI::Range(3, 100000));
    bench_cmd->add_option("--out", out_path, "CSV output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        g.seed = seed_flag ? *seed_flag : default_seed();
#ifdef _OPENMP
        if (g.jobs > 0) omp_set_num_threads(g.jobs);
#endif
        auto log = [&](const std::string& msg) {
            if (!g.quiet) std::cerr << msg << '\n';
        };

        if (*graph_cmd) {
            const Dataset data = load_input(input, label, standardize_first);
            const GabrielGraph graph = witness ? build_graph_with_witness(data) : build_graph(data);
            Output out(out_path);
            if (format == "dot")
                write_dot(out.stream(), graph, data);
            else
                write_adjacency_csv(out.stream(), graph, data, witness);
            log(std::to_string(data.size()) + " vertices, " + std::to_string(graph.edge_count()) + " edges");
        } else if (*membership_cmd || *filter_cmd) {
            const Dataset data = load_input(input, label, standardize_first);
            const GabrielGraph graph = build_graph(data);
            const FilterPolicy policy = parse_policy_flag(policy_text, data.class_count());
            const FilterModel model =
                make_filter_model(graph, data, parse_membership_flag(membership), sigma, policy);
            const FilterResult result = filter_samples(data, model);
            Output out(out_path);
            if (*membership_cmd) {
                write_membership_report(out.stream(), graph, data, model, result);
            } else {
                out.stream() << "sample_index,class,status\n";
                std::vector<char> removed(data.size(), 0);
                for (std::size_t i : result.removed) removed[i] = 1;
                for (std::size_t i = 0; i < data.size(); ++i)
                    out.stream() << i << ',' << data.label(i) << ',' << (removed[i] ? "removed" : "kept") << '\n';
            }
            for (int c : result.guarded_classes)
                log("class " + std::to_string(c) + " would have been emptied; its best sample was kept");
            log(std::to_string(result.removed.size()) + " of " + std::to_string(data.size()) + " samples removed");
        } else if (*train_cmd) {
            PipelineOptions opts;
            opts.architecture = resolve_architecture(arch, activation);
            opts.membership = parse_membership_flag(membership);
            opts.mode = parse_training_mode(mode);
            const Dataset data = load_csv(input, label);
            opts.sigma = sigma;
            opts.policy = parse_policy_flag(policy_text, data.class_count());
            const PipelineFit fit = train_model(data, opts);
            save_model(fit.model, out_path);
            if (fit.support_fallback) log("filtering removed every support edge; trained on unfiltered support");
            log(std::to_string(fit.removed) + " samples removed, " + std::to_string(fit.model.hidden_size()) +
                " hidden units");
        } else if (*predict_cmd) {
            const TrainedModel model = load_model(model_path);
            std::vector<std::string> names;
            const FeatureMatrix x = load_feature_csv(input, label, &names);
            const Eigen::MatrixXd probs = predict_proba(model, x);
            Output out(out_path);
            for (int c = 0; c < model.class_count; ++c) {
                if (c > 0) out.stream() << ',';
                const auto idx = static_cast<std::size_t>(c);
                out.stream() << "p_" << (idx < model.class_labels.size() ? model.class_labels[idx] : std::to_string(c));
            }
            out.stream() << '\n';
            char buf[32];
            for (Eigen::Index i = 0; i < probs.rows(); ++i) {
                for (Eigen::Index c = 0; c < probs.cols(); ++c) {
                    std::snprintf(buf, sizeof buf, "%.17g", probs(i, c));
                    out.stream() << (c > 0 ? "," : "") << buf;
                }
                out.stream() << '\n';
            }
        } else if (*cv_cmd) {
            ExperimentConfig config;
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) throw DataError("cannot open " + config_path);
                nlohmann::json doc;
                try {
                    doc = nlohmann::json::parse(in);
                } catch (const nlohmann::json::exception& e) {
                    throw DataError(config_path + ": " + e.what());
                }
                config = config_from_json(doc);
                if (!seed_flag && !doc.contains("seed")) config.seed = g.seed;
                if (seed_flag) config.seed = *seed_flag;
            } else {
                config.architecture = resolve_architecture(arch, activation);
                config.membership = parse_membership_flag(membership);
                config.filter = filter_kind == "none"        ? FilterPolicy::Kind::none
                                : filter_kind == "threshold" ? FilterPolicy::Kind::threshold
                                                             : FilterPolicy::Kind::per_class_count;
                config.mode = parse_training_mode(mode);
                config.outer_folds = outer;
                config.inner_folds = inner;
                config.label_column = label;
                config.seed = g.seed;
            }
            if (!dataset_flag.empty()) config.dataset_path = dataset_flag;
            if (config.dataset_path.empty()) throw CLI::ValidationError("cv", "no dataset given (config or --data)");
            config.validate();
            const Dataset data = load_csv(config.dataset_path, config.label_column);
            const CvReport report = run_nested_cv(data, config);
            nlohmann::json doc = report.to_json();
            doc["config"] = config_to_json(config);
            Output out(out_path);
            out.stream() << doc.dump(2) << '\n';
            if (!table_path.empty()) {
                Output table(table_path);
                table.stream() << report.table();
            }
            if (!g.quiet) std::cerr << report.table();
        } else if (*bench_cmd) {
            const Dataset data = input.empty() ? synthetic_dataset(bench_m, bench_n, g.seed) : load_csv(input, label);
            const std::string id = input.empty() ? "synthetic" : input;
            const auto records = bench_recompute(data, id, fractions, reps, g.seed);
            Output out(out_path);
            write_bench_csv(out.stream(), records);
            for (const auto& r : records)
                log("fraction " + std::to_string(r.fraction) + ": fresh " + std::to_string(r.mean_fresh()) +
                    " s, incremental " + std::to_string(r.mean_incremental()) + " s");
        }
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace ggc
