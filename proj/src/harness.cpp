#include "ggclass/harness.hpp"

#include "ggclass/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace ggc {

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(trim(cell));
            cell.clear();
        } else {
            cell += ch;
        }
    }
    cells.push_back(trim(cell));
    return cells;
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

RawTable read_table(std::istream& in, const std::string& source) {
    RawTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw DataError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " cells, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw DataError(source + ": empty file");
    return t;
}

} // namespace

Dataset parse_csv(std::istream& in, const std::string& label_column, const std::string& source) {
    const RawTable t = read_table(in, source);
    const auto label_it = std::find(t.header.begin(), t.header.end(), label_column);
    if (label_it == t.header.end()) throw DataError(source + ": no label column '" + label_column + "'");
    const auto label_col = static_cast<std::size_t>(label_it - t.header.begin());
    if (t.header.size() < 2) throw DataError(source + ": no feature columns");
    if (t.rows.empty()) throw DataError(source + ": no data rows");

    std::vector<std::string> feature_names;
    for (std::size_t c = 0; c < t.header.size(); ++c)
        if (c != label_col) feature_names.push_back(t.header[c]);

    const auto m = static_cast<Eigen::Index>(t.rows.size());
    const auto n = static_cast<Eigen::Index>(feature_names.size());
    FeatureMatrix x(m, n);
    std::vector<std::string> raw_labels;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        Eigen::Index d = 0;
        for (std::size_t c = 0; c < t.header.size(); ++c) {
            const std::string& cell = t.rows[r][c];
            const std::string where = "row " + std::to_string(r + 1) + ", column '" + t.header[c] + "'";
            if (cell.empty()) throw DataError(source + ": missing value at " + where);
            if (c == label_col) {
                raw_labels.push_back(cell);
                continue;
            }
            const auto v = parse_double(cell);
            if (!v) throw DataError(source + ": non-numeric value '" + cell + "' at " + where);
            x(static_cast<Eigen::Index>(r), d++) = *v;
        }
    }

    std::vector<std::string> names(raw_labels.begin(), raw_labels.end());
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    const bool numeric = std::all_of(names.begin(), names.end(), [](const std::string& s) {
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        return ec == std::errc() && ptr == s.data() + s.size();
    });
    if (numeric)
        std::sort(names.begin(), names.end(),
                  [](const std::string& a, const std::string& b) { return std::stoll(a) < std::stoll(b); });
    std::map<std::string, int> ids;
    for (std::size_t c = 0; c < names.size(); ++c) ids[names[c]] = static_cast<int>(c);
    LabelVector labels;
    labels.reserve(raw_labels.size());
    for (const auto& s : raw_labels) labels.push_back(ids.at(s));

    const auto dups = find_duplicate_rows(x);
    if (!dups.empty()) {
        std::ostringstream msg;
        msg << source << ": duplicate feature rows (data row numbers, 1-based):";
        const std::size_t shown = std::min<std::size_t>(dups.size(), 10);
        for (std::size_t d = 0; d < shown; ++d) msg << " (" << dups[d].first + 1 << ", " << dups[d].second + 1 << ")";
        if (dups.size() > shown) msg << " and " << dups.size() - shown << " more";
        throw DataError(msg.str());
    }
    const auto class_count = static_cast<int>(names.size());
    return Dataset(std::move(x), std::move(labels), class_count, std::move(names), std::move(feature_names));
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_csv(in, label_column, path);
}

FeatureMatrix load_feature_csv(const std::string& path, const std::string& label_column,
                               std::vector<std::string>* feature_names) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    const RawTable t = read_table(in, path);
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (t.header[c] == label_column) continue;
        cols.push_back(c);
        if (feature_names) feature_names->push_back(t.header[c]);
    }
    FeatureMatrix x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t d = 0; d < cols.size(); ++d) {
            const std::string& cell = t.rows[r][cols[d]];
            const std::string where = "row " + std::to_string(r + 1) + ", column '" + t.header[cols[d]] + "'";
            if (cell.empty()) throw DataError(path + ": missing value at " + where);
            const auto v = parse_double(cell);
            if (!v) throw DataError(path + ": non-numeric value '" + cell + "' at " + where);
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = *v;
        }
    return x;
}

// ---------------------------------------------------------------------------
// Folds

std::vector<Fold> stratified_kfold(std::span<const int> labels, int class_count, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("stratified_kfold: need at least two folds");
    std::vector<IndexList> by_class(static_cast<std::size_t>(class_count));
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c)
        if (by_class[c].size() < static_cast<std::size_t>(k))
            throw DataError("stratified_kfold: class " + std::to_string(c) + " has " +
                            std::to_string(by_class[c].size()) + " samples, fewer than " + std::to_string(k) +
                            " folds");

    std::mt19937_64 rng(seed);
    std::vector<IndexList> test(static_cast<std::size_t>(k));
    std::size_t next = 0;
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t i : members) {
            test[next].push_back(i);
            next = (next + 1) % static_cast<std::size_t>(k);
        }
    }
    std::vector<Fold> folds(static_cast<std::size_t>(k));
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::sort(test[f].begin(), test[f].end());
        std::vector<char> in_test(labels.size(), 0);
        for (std::size_t i : test[f]) in_test[i] = 1;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (!in_test[i]) folds[f].train.push_back(i);
        folds[f].test = std::move(test[f]);
    }
    return folds;
}

std::vector<Fold> stratified_kfold(const Dataset& data, int k, std::uint64_t seed) {
    return stratified_kfold(data.labels(), data.class_count(), k, seed);
}

// ---------------------------------------------------------------------------
// Configuration

std::vector<double> SearchSpace::sigmas(std::uint64_t seed) const {
    if (!(sigma_low > 0.0) || !(sigma_high > sigma_low))
        throw std::invalid_argument("search space: need 0 < sigma_low < sigma_high");
    const double lo = std::log(sigma_low);
    const double hi = std::log(sigma_high);
    std::vector<double> out;
    if (sigma_draws > 0) {
        std::mt19937_64 rng(seed ^ 0x5eed5167a5ULL);
        std::uniform_real_distribution<double> u(lo, hi);
        for (int i = 0; i < sigma_draws; ++i) out.push_back(std::exp(u(rng)));
        return out;
    }
    if (sigma_grid < 1) throw std::invalid_argument("search space: sigma grid needs at least one point");
    if (sigma_grid == 1) return {std::exp(0.5 * (lo + hi))};
    for (int i = 0; i < sigma_grid; ++i) out.push_back(std::exp(lo + (hi - lo) * i / (sigma_grid - 1)));
    return out;
}

void ExperimentConfig::validate() const {
    if (outer_folds < 2 || inner_folds < 2) throw std::invalid_argument("config: fold counts must be at least 2");
    if (!(search.sigma_low > 0.0) || !(search.sigma_high > search.sigma_low))
        throw std::invalid_argument("config: sigma bounds must satisfy 0 < low < high");
    if (!(search.filter_count_cap >= 0.0 && search.filter_count_cap < 1.0))
        throw std::invalid_argument("config: filter_count_cap must lie in [0, 1)");
    if (filter == FilterPolicy::Kind::per_class_count && search.filter_counts.empty())
        throw std::invalid_argument("config: per-class-count filtering needs at least one candidate count");
}

namespace {

std::string membership_name(MembershipKind k) { return k == MembershipKind::distance ? "distance" : "cardinality"; }

MembershipKind parse_membership(const std::string& s) {
    if (s == "distance") return MembershipKind::distance;
    if (s == "cardinality") return MembershipKind::cardinality;
    throw std::invalid_argument("unknown membership kind '" + s + "'");
}

std::string filter_kind_name(FilterPolicy::Kind k) {
    switch (k) {
    case FilterPolicy::Kind::none: return "none";
    case FilterPolicy::Kind::threshold: return "threshold";
    case FilterPolicy::Kind::per_class_count: return "per-class-count";
    }
    return "unknown";
}

FilterPolicy::Kind parse_filter_kind(const std::string& s) {
    if (s == "none") return FilterPolicy::Kind::none;
    if (s == "threshold") return FilterPolicy::Kind::threshold;
    if (s == "per-class-count" || s == "count") return FilterPolicy::Kind::per_class_count;
    throw std::invalid_argument("unknown filter policy '" + s + "'");
}

} // namespace

ExperimentConfig config_from_json(const nlohmann::json& doc) {
    ExperimentConfig c;
    try {
        c.dataset_path = doc.value("dataset", std::string{});
        c.label_column = doc.value("label_column", c.label_column);
        c.architecture = parse_architecture(doc.value("architecture", to_string(c.architecture)));
        c.membership = parse_membership(doc.value("membership", membership_name(c.membership)));
        c.filter = parse_filter_kind(doc.value("filter_policy", filter_kind_name(c.filter)));
        c.outer_folds = doc.value("outer_folds", c.outer_folds);
        c.inner_folds = doc.value("inner_folds", c.inner_folds);
        c.seed = doc.value("seed", c.seed);
        c.mode = parse_training_mode(doc.value("mode", to_string(c.mode)));
        if (doc.contains("sigma")) {
            const auto& s = doc.at("sigma");
            c.search.sigma_low = s.value("low", c.search.sigma_low);
            c.search.sigma_high = s.value("high", c.search.sigma_high);
            c.search.sigma_grid = s.value("grid", c.search.sigma_grid);
            c.search.sigma_draws = s.value("draws", c.search.sigma_draws);
        }
        if (doc.contains("filter_counts")) c.search.filter_counts = doc.at("filter_counts").get<std::vector<std::size_t>>();
        c.search.filter_count_cap = doc.value("filter_count_cap", c.search.filter_count_cap);
        if (doc.contains("gradient")) {
            const auto& g = doc.at("gradient");
            c.gradient.step = g.value("step", c.gradient.step);
            c.gradient.max_epochs = g.value("max_epochs", c.gradient.max_epochs);
            c.gradient.tolerance = g.value("tolerance", c.gradient.tolerance);
            c.gradient.init_from_pseudoinverse = g.value("init", std::string("pseudoinverse")) != "zeros";
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    return {{"dataset", c.dataset_path},
            {"label_column", c.label_column},
            {"architecture", to_string(c.architecture)},
            {"membership", membership_name(c.membership)},
            {"filter_policy", filter_kind_name(c.filter)},
            {"outer_folds", c.outer_folds},
            {"inner_folds", c.inner_folds},
            {"seed", c.seed},
            {"mode", to_string(c.mode)},
            {"sigma",
             {{"low", c.search.sigma_low},
              {"high", c.search.sigma_high},
              {"grid", c.search.sigma_grid},
              {"draws", c.search.sigma_draws}}},
            {"filter_counts", c.search.filter_counts},
            {"filter_count_cap", c.search.filter_count_cap},
            {"gradient",
             {{"step", c.gradient.step},
              {"max_epochs", c.gradient.max_epochs},
              {"tolerance", c.gradient.tolerance},
              {"init", c.gradient.init_from_pseudoinverse ? "pseudoinverse" : "zeros"}}}};
}

// ---------------------------------------------------------------------------
// Pipeline

PreparedSplit prepare_split(const Dataset& raw_train) {
    PreparedSplit split;
    split.preprocessing = fit_preprocessing(raw_train);
    split.train = split.preprocessing.apply(raw_train);
    split.graph = build_graph_with_witness(split.train);
    return split;
}

namespace {

FilterPolicy clamp_counts(FilterPolicy policy, const std::vector<std::size_t>& class_sizes, double cap) {
    if (policy.kind != FilterPolicy::Kind::per_class_count) return policy;
    for (std::size_t c = 0; c < policy.counts.size() && c < class_sizes.size(); ++c) {
        const auto limit = static_cast<std::size_t>(std::floor(cap * static_cast<double>(class_sizes[c])));
        policy.counts[c] = std::min(policy.counts[c], limit);
    }
    return policy;
}

TrainedModel fit_architecture(const Dataset& train, const SupportStructure& support, const PipelineOptions& o) {
    switch (o.architecture) {
    case Architecture::chipclass_exp:
    case Architecture::chipclass_tanh: return fit_chipclass(support, train, o.architecture);
    case Architecture::ssv_binary: return fit_ssv_binary(train, support);
    case Architecture::ssv_multiclass: return fit_multiclass(train, support, o.mode, o.gradient);
    }
    throw std::invalid_argument("unknown architecture");
}

} // namespace

PipelineFit fit_pipeline(const PreparedSplit& split, const PipelineOptions& options) {
    const Dataset& train = split.train;
    PipelineFit fit;

    FilterResult filtered;
    if (options.policy.kind == FilterPolicy::Kind::none) {
        filtered.kept.resize(train.size());
        std::iota(filtered.kept.begin(), filtered.kept.end(), std::size_t{0});
    } else {
        const FilterModel filter =
            make_filter_model(split.graph, train, options.membership, options.sigma, options.policy);
        filtered = filter_samples(train, filter);
    }
    fit.kept = filtered.kept;
    fit.removed = filtered.removed.size();
    fit.guarded_classes = filtered.guarded_classes;

    std::optional<SupportStructure> support;
    Dataset survivors;
    if (filtered.removed.empty()) {
        survivors = train;
        support = extract_support(split.graph, train);
    } else {
        survivors = train.subset(filtered.kept);
        const GabrielGraph reduced = recompute_after_removal(split.graph, train, filtered.removed);
        support = extract_support(reduced, survivors);
        if (!support) {
            fit.support_fallback = true;
            survivors = train;
            fit.kept.resize(train.size());
            std::iota(fit.kept.begin(), fit.kept.end(), std::size_t{0});
            fit.removed = 0;
            support = extract_support(split.graph, train);
        }
    }
    if (!support) throw DataError("pipeline: training data has no edge between different classes");

    fit.support_edges = support->edges.size();
    fit.ssv_count = support->ssvs.size();
    fit.model = fit_architecture(survivors, *support, options);
    fit.model.preprocessing = split.preprocessing;
    fit.model.membership = options.policy.kind == FilterPolicy::Kind::none ? "none" : membership_name(options.membership);
    fit.model.filter_policy = options.policy.describe();
    if (options.policy.kind != FilterPolicy::Kind::none && options.membership == MembershipKind::distance)
        fit.model.sigma_used = options.sigma;
    return fit;
}

PipelineFit train_model(const Dataset& raw, const PipelineOptions& options) {
    raw.require_all_classes();
    return fit_pipeline(prepare_split(raw), options);
}

double evaluate_model(const TrainedModel& model, const Dataset& raw_test) {
    const Eigen::MatrixXd probs = predict_proba(model, raw_test.features());
    std::optional<double> metric;
    if (model.class_count == 2) {
        std::vector<double> scores(raw_test.size());
        std::vector<int> positive(raw_test.size());
        for (std::size_t i = 0; i < raw_test.size(); ++i) {
            scores[i] = probs(static_cast<Eigen::Index>(i), 1);
            positive[i] = raw_test.label(i) == 1 ? 1 : 0;
        }
        metric = auc_binary(scores, positive);
    } else {
        metric = roc_auc_ovo(probs, raw_test.labels());
    }
    if (!metric) throw DataError("evaluation: metric undefined, a class is missing from the evaluation split");
    return *metric;
}

// ---------------------------------------------------------------------------
// Nested cross-validation

namespace {

struct Candidate {
    double sigma = std::numeric_limits<double>::quiet_NaN();
    FilterPolicy policy;
};

std::vector<Candidate> make_candidates(const ExperimentConfig& config, const std::vector<std::size_t>& class_sizes,
                                       std::uint64_t seed) {
    std::vector<double> sigmas;
    if (config.membership == MembershipKind::distance && config.filter != FilterPolicy::Kind::none)
        sigmas = config.search.sigmas(seed);
    else
        sigmas = {std::numeric_limits<double>::quiet_NaN()};

    std::vector<FilterPolicy> policies;
    switch (config.filter) {
    case FilterPolicy::Kind::none: policies.push_back(FilterPolicy::none()); break;
    case FilterPolicy::Kind::threshold: policies.push_back(FilterPolicy::threshold()); break;
    case FilterPolicy::Kind::per_class_count: {
        const std::size_t c = class_sizes.size();
        std::vector<std::vector<std::size_t>> choices(c);
        for (std::size_t k = 0; k < c; ++k) {
            const auto limit = static_cast<std::size_t>(
                std::floor(config.search.filter_count_cap * static_cast<double>(class_sizes[k])));
            std::set<std::size_t> allowed;
            for (std::size_t r : config.search.filter_counts) allowed.insert(std::min(r, limit));
            choices[k].assign(allowed.begin(), allowed.end());
        }
        std::set<std::vector<std::size_t>> combos;
        if (c <= 3) {
            std::vector<std::size_t> pick(c, 0);
            while (true) {
                std::vector<std::size_t> counts(c);
                for (std::size_t k = 0; k < c; ++k) counts[k] = choices[k][pick[k]];
                combos.insert(counts);
                std::size_t k = 0;
                while (k < c && ++pick[k] == choices[k].size()) pick[k++] = 0;
                if (k == c) break;
            }
        } else {
            // One shared count for every class.
            for (std::size_t r : config.search.filter_counts) {
                std::vector<std::size_t> counts(c);
                for (std::size_t k = 0; k < c; ++k)
                    counts[k] = std::min(r, static_cast<std::size_t>(std::floor(
                                                config.search.filter_count_cap * static_cast<double>(class_sizes[k]))));
                combos.insert(counts);
            }
        }
        for (const auto& counts : combos) policies.push_back(FilterPolicy::per_class(counts));
        break;
    }
    }

    const auto removes = [](const FilterPolicy& p) {
        return p.kind == FilterPolicy::Kind::threshold ||
               std::any_of(p.counts.begin(), p.counts.end(), [](std::size_t r) { return r > 0; });
    };
    std::vector<Candidate> out;
    for (const auto& p : policies)
        if (!removes(p)) out.push_back({std::numeric_limits<double>::quiet_NaN(), p});
    for (double s : sigmas)
        for (const auto& p : policies)
            if (removes(p)) out.push_back({s, p});
    return out;
}

PipelineOptions options_for(const ExperimentConfig& config, const Candidate& cand) {
    PipelineOptions o;
    o.architecture = config.architecture;
    o.membership = config.membership;
    o.sigma = std::isnan(cand.sigma) ? 1.0 : cand.sigma;
    o.policy = cand.policy;
    o.mode = config.mode;
    o.gradient = config.gradient;
    return o;
}

IndexList map_rows(const IndexList& base, const IndexList& local) {
    IndexList out;
    out.reserve(local.size());
    for (std::size_t i : local) out.push_back(base[i]);
    return out;
}

} // namespace

CvReport run_nested_cv(const Dataset& data, const ExperimentConfig& config, const StageObserver& observer) {
    config.validate();
    data.require_all_classes();
    CvReport report;
    report.metric_name = data.class_count() == 2 ? "auc" : "roc_auc_ovo";

    const auto notify = [&](const char* stage, std::size_t fold, const IndexList& rows) {
        if (observer) observer(stage, fold, rows);
    };

    const std::vector<Fold> outer = stratified_kfold(data, config.outer_folds, config.seed);
    std::vector<double> metrics;
    for (std::size_t f = 0; f < outer.size(); ++f) {
        const Dataset outer_train = data.subset(outer[f].train);
        const Dataset outer_test = data.subset(outer[f].test);
        const std::uint64_t fold_seed = config.seed + 7919ULL * (f + 1);
        const std::vector<Candidate> candidates = make_candidates(config, outer_train.class_sizes(), fold_seed);

        FoldResult result;
        result.fold = f;
        std::size_t best = 0;
        result.inner_score = std::numeric_limits<double>::quiet_NaN();

        if (candidates.size() > 1) {
            const std::vector<Fold> inner = stratified_kfold(outer_train, config.inner_folds, fold_seed);
            const std::size_t nc = candidates.size();
            Eigen::MatrixXd scores = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(nc),
                                                               static_cast<Eigen::Index>(inner.size()),
                                                               std::numeric_limits<double>::quiet_NaN());
            std::vector<char> used_fallback(nc, 0);
            for (std::size_t g = 0; g < inner.size(); ++g) {
                notify("inner_fit", f, map_rows(outer[f].train, inner[g].train));
                notify("inner_validate", f, map_rows(outer[f].train, inner[g].test));
                const PreparedSplit split = prepare_split(outer_train.subset(inner[g].train));
                const Dataset validation = outer_train.subset(inner[g].test);
                const auto sizes = split.train.class_sizes();
#pragma omp parallel for schedule(dynamic)
                for (std::size_t c = 0; c < nc; ++c) {
                    try {
                        PipelineOptions opts = options_for(config, candidates[c]);
                        opts.policy = clamp_counts(opts.policy, sizes, config.search.filter_count_cap);
                        const PipelineFit fit = fit_pipeline(split, opts);
                        if (fit.support_fallback) used_fallback[c] = 1;
                        scores(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(g)) =
                            evaluate_model(fit.model, validation);
                    } catch (const std::exception&) {
                        // Left as NaN: the candidate is not selectable.
                    }
                }
            }
            double best_score = -std::numeric_limits<double>::infinity();
            bool found = false;
            for (std::size_t c = 0; c < nc; ++c) {
                const auto row = scores.row(static_cast<Eigen::Index>(c));
                if (!row.allFinite()) continue;
                const double mean = row.mean();
                if (!found || mean > best_score) {
                    best_score = mean;
                    best = c;
                    found = true;
                }
            }
            if (!found) throw NumericalError("nested cv: no hyperparameter candidate could be fitted in fold " +
                                             std::to_string(f));
            result.inner_score = best_score;
            result.fallback_candidates =
                static_cast<std::size_t>(std::count(used_fallback.begin(), used_fallback.end(), 1));
        }

        notify("refit", f, outer[f].train);
        const PreparedSplit split = prepare_split(outer_train);
        PipelineOptions opts = options_for(config, candidates[best]);
        opts.policy = clamp_counts(opts.policy, split.train.class_sizes(), config.search.filter_count_cap);
        const PipelineFit fit = fit_pipeline(split, opts);
        notify("evaluate", f, outer[f].test);

        result.metric = evaluate_model(fit.model, outer_test);
        result.metric_class0_positive = std::numeric_limits<double>::quiet_NaN();
        if (data.class_count() == 2) {
            const Eigen::MatrixXd probs = predict_proba(fit.model, outer_test.features());
            std::vector<double> scores(outer_test.size());
            std::vector<int> positive(outer_test.size());
            for (std::size_t i = 0; i < outer_test.size(); ++i) {
                scores[i] = probs(static_cast<Eigen::Index>(i), 0);
                positive[i] = outer_test.label(i) == 0 ? 1 : 0;
            }
            result.metric_class0_positive = auc_binary(scores, positive).value_or(result.metric_class0_positive);
        }
        result.sigma = candidates[best].sigma;
        result.filter = opts.policy.describe();
        result.n_ssv = fit.ssv_count;
        result.support_edges = fit.support_edges;
        result.removed = fit.removed;
        result.support_fallback = fit.support_fallback;
        metrics.push_back(result.metric);
        report.folds.push_back(std::move(result));
    }
    report.summary = summarize(std::move(metrics));
    return report;
}

nlohmann::json CvReport::to_json() const {
    nlohmann::json folds_json = nlohmann::json::array();
    for (const auto& r : folds) {
        folds_json.push_back({{"fold", r.fold},
                              {"metric", r.metric},
                              {"auc_class0_positive", std::isnan(r.metric_class0_positive)
                                                          ? nlohmann::json(nullptr)
                                                          : nlohmann::json(r.metric_class0_positive)},
                              {"inner_score", std::isnan(r.inner_score) ? nlohmann::json(nullptr)
                                                                        : nlohmann::json(r.inner_score)},
                              {"sigma", std::isnan(r.sigma) ? nlohmann::json(nullptr) : nlohmann::json(r.sigma)},
                              {"filter", r.filter},
                              {"n_ssv", r.n_ssv},
                              {"support_edges", r.support_edges},
                              {"removed", r.removed},
                              {"support_fallback", r.support_fallback},
                              {"fallback_candidates", r.fallback_candidates}});
    }
    return {{"metric", metric_name}, {"per_fold", folds_json}, {"mean", summary.mean}, {"std", summary.stddev}};
}

std::string CvReport::table() const {
    std::ostringstream out;
    out << std::left << std::setw(6) << "fold" << std::right << std::setw(10) << metric_name << std::setw(10)
        << "sigma" << std::setw(16) << "filter" << std::setw(8) << "n_ssv" << std::setw(9) << "removed" << '\n';
    out << std::fixed;
    for (const auto& r : folds) {
        out << std::left << std::setw(6) << r.fold << std::right << std::setw(10) << std::setprecision(4) << r.metric;
        if (std::isnan(r.sigma))
            out << std::setw(10) << "-";
        else
            out << std::setw(10) << std::setprecision(4) << r.sigma;
        out << std::setw(16) << r.filter << std::setw(8) << r.n_ssv << std::setw(9) << r.removed
            << (r.support_fallback ? "  (support fallback)" : "") << '\n';
    }
    out << std::left << std::setw(6) << "mean" << std::right << std::setw(10) << std::setprecision(4) << summary.mean
        << "  +/- " << std::setprecision(4) << summary.stddev << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Benchmark

namespace {

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

} // namespace

double BenchmarkRecord::mean_fresh() const { return mean_of(fresh_seconds); }
double BenchmarkRecord::mean_incremental() const { return mean_of(incremental_seconds); }
double BenchmarkRecord::std_fresh() const { return std_of(fresh_seconds); }
double BenchmarkRecord::std_incremental() const { return std_of(incremental_seconds); }

std::vector<BenchmarkRecord> bench_recompute(const Dataset& data, const std::string& dataset_id,
                                             std::span<const double> removal_fractions, int repetitions,
                                             std::uint64_t seed) {
    if (repetitions < 3) throw std::invalid_argument("bench: at least three repetitions required");
    for (double f : removal_fractions)
        if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("bench: removal fractions must lie in (0, 1)");

    using clock = std::chrono::steady_clock;
    const GabrielGraph witness = build_graph_with_witness(data);
    std::mt19937_64 rng(seed);
    IndexList all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});

    std::vector<BenchmarkRecord> records;
    for (double fraction : removal_fractions) {
        BenchmarkRecord rec;
        rec.dataset = dataset_id;
        rec.m = data.size();
        rec.fraction = fraction;
        const auto r = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(data.size())));
        if (r == 0 || data.size() - r < 2) throw std::invalid_argument("bench: fraction leaves too few samples");
        for (int rep = 0; rep < repetitions; ++rep) {
            IndexList order = all;
            std::shuffle(order.begin(), order.end(), rng);
            IndexList removed(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r));
            IndexList kept(order.begin() + static_cast<std::ptrdiff_t>(r), order.end());
            std::sort(removed.begin(), removed.end());
            std::sort(kept.begin(), kept.end());

            const auto t0 = clock::now();
            const GabrielGraph fresh = build_graph(data.subset(kept));
            const auto t1 = clock::now();
            const GabrielGraph incremental = recompute_after_removal(witness, data, removed);
            const auto t2 = clock::now();

            if (fresh.adjacency != incremental.adjacency)
                throw NumericalError("bench: incremental and fresh graphs differ (fraction " +
                                     std::to_string(fraction) + ", repetition " + std::to_string(rep) + ")");
            rec.fresh_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
            rec.incremental_seconds.push_back(std::chrono::duration<double>(t2 - t1).count());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_bench_csv(std::ostream& out, std::span<const BenchmarkRecord> records) {
    const auto old_precision = out.precision(9);
    out << "dataset,m,fraction,rep,method,seconds\n";
    for (const auto& rec : records) {
        for (std::size_t i = 0; i < rec.fresh_seconds.size(); ++i)
            out << rec.dataset << ',' << rec.m << ',' << rec.fraction << ',' << i << ",fresh," << rec.fresh_seconds[i]
                << '\n';
        for (std::size_t i = 0; i < rec.incremental_seconds.size(); ++i)
            out << rec.dataset << ',' << rec.m << ',' << rec.fraction << ',' << i << ",incremental,"
                << rec.incremental_seconds[i] << '\n';
    }
    out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Synthetic data

Dataset synthetic_dataset(std::size_t m, Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    FeatureMatrix x(static_cast<Eigen::Index>(m), n);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index d = 0; d < n; ++d) x(i, d) = u(rng);
    Eigen::VectorXd normal(n);
    for (Eigen::Index d = 0; d < n; ++d) normal(d) = g(rng);
    LabelVector labels(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double side = (x.row(static_cast<Eigen::Index>(i)).transpose().array() - 0.5).matrix().dot(normal);
        labels[i] = side > 0.0 ? 1 : 0;
    }
    const int classes = (std::find(labels.begin(), labels.end(), 1) != labels.end() &&
                         std::find(labels.begin(), labels.end(), 0) != labels.end())
                            ? 2
                            : 1;
    if (classes == 1) std::fill(labels.begin(), labels.end(), 0);
    return Dataset(std::move(x), std::move(labels), classes);
}

Dataset gaussian_blobs(std::size_t per_class, int classes, double separation, double spread, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spread);
    FeatureMatrix x(static_cast<Eigen::Index>(per_class * static_cast<std::size_t>(classes)), 2);
    LabelVector labels;
    Eigen::Index row = 0;
    for (int c = 0; c < classes; ++c) {
        const double angle = 2.0 * std::numbers::pi * c / classes;
        const double cx = separation * std::cos(angle);
        const double cy = separation * std::sin(angle);
        for (std::size_t i = 0; i < per_class; ++i, ++row) {
            x(row, 0) = cx + g(rng);
            x(row, 1) = cy + g(rng);
            labels.push_back(c);
        }
    }
    return Dataset(std::move(x), std::move(labels), classes);
}

} // namespace ggc
