#include "ggclass/regularization.hpp"

#include "ggclass/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ggc {

namespace {

void check_aligned(const GabrielGraph& graph, const Dataset& data, std::size_t i) {
    if (graph.size() != data.size()) throw std::invalid_argument("membership: graph and dataset sizes differ");
    if (i >= data.size()) throw std::out_of_range("membership: sample index out of range");
}

} // namespace

namespace {

// NaN marks an isolated vertex; callers turn it into an error outside parallel loops.
double cardinality_at(const GabrielGraph& graph, const Dataset& data, std::size_t i) {
    std::size_t same = 0;
    std::size_t total = 0;
    for (std::size_t k : graph.neighbors(i)) {
        ++total;
        if (data.label(k) == data.label(i)) ++same;
    }
    if (total == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(same) / static_cast<double>(total);
}

double distance_at(const GabrielGraph& graph, const Dataset& data, std::size_t i, double sigma) {
    const IndexList nbrs = graph.neighbors(i);
    if (nbrs.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double scale = 2.0 * sigma * sigma;
    std::vector<double> d2(nbrs.size());
    for (std::size_t t = 0; t < nbrs.size(); ++t)
        d2[t] = squared_distance(data.row_ptr(i), data.row_ptr(nbrs[t]), data.dim());
    double same = 0.0;
    double total = 0.0;
    for (std::size_t t = 0; t < nbrs.size(); ++t) {
        const double w = std::exp(-d2[t] / scale);
        total += w;
        if (data.label(nbrs[t]) == data.label(i)) same += w;
    }
    if (total == 0.0) {
        // All kernels underflowed: rescale by the nearest neighbour.
        const double nearest = *std::min_element(d2.begin(), d2.end());
        for (std::size_t t = 0; t < nbrs.size(); ++t) {
            const double w = std::exp(-(d2[t] - nearest) / scale);
            total += w;
            if (data.label(nbrs[t]) == data.label(i)) same += w;
        }
    }
    return same / total;
}

void require_no_isolated(const Eigen::VectorXd& q) {
    for (Eigen::Index i = 0; i < q.size(); ++i)
        if (std::isnan(q(i))) throw std::logic_error("membership: isolated vertex " + std::to_string(i));
}

} // namespace

double membership_cardinality(const GabrielGraph& graph, const Dataset& data, std::size_t i) {
    check_aligned(graph, data, i);
    const double q = cardinality_at(graph, data, i);
    if (std::isnan(q)) throw std::logic_error("membership: isolated vertex " + std::to_string(i));
    return q;
}

double membership_distance(const GabrielGraph& graph, const Dataset& data, std::size_t i, double sigma) {
    check_aligned(graph, data, i);
    if (!(sigma > 0.0)) throw std::invalid_argument("membership: sigma must be positive");
    const double q = distance_at(graph, data, i, sigma);
    if (std::isnan(q)) throw std::logic_error("membership: isolated vertex " + std::to_string(i));
    return q;
}

Eigen::VectorXd memberships_cardinality(const GabrielGraph& graph, const Dataset& data) {
    if (graph.size() != data.size()) throw std::invalid_argument("membership: graph and dataset sizes differ");
    Eigen::VectorXd q(static_cast<Eigen::Index>(data.size()));
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = cardinality_at(graph, data, static_cast<std::size_t>(i));
    require_no_isolated(q);
    return q;
}

Eigen::VectorXd memberships_distance(const GabrielGraph& graph, const Dataset& data, double sigma) {
    if (graph.size() != data.size()) throw std::invalid_argument("membership: graph and dataset sizes differ");
    if (!(sigma > 0.0)) throw std::invalid_argument("membership: sigma must be positive");
    Eigen::VectorXd q(static_cast<Eigen::Index>(data.size()));
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = distance_at(graph, data, static_cast<std::size_t>(i), sigma);
    require_no_isolated(q);
    return q;
}

std::vector<double> class_thresholds(std::span<const double> memberships, std::span<const int> labels,
                                     int class_count) {
    if (memberships.size() != labels.size()) throw std::invalid_argument("class_thresholds: size mismatch");
    const auto c_count = static_cast<std::size_t>(class_count);
    std::vector<double> sum(c_count, 0.0);
    std::vector<double> lo(c_count, std::numeric_limits<double>::infinity());
    std::vector<double> hi(c_count, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> count(c_count, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= class_count) throw std::invalid_argument("class_thresholds: bad label");
        const auto c = static_cast<std::size_t>(labels[i]);
        sum[c] += memberships[i];
        lo[c] = std::min(lo[c], memberships[i]);
        hi[c] = std::max(hi[c], memberships[i]);
        ++count[c];
    }
    for (std::size_t c = 0; c < c_count; ++c) {
        if (count[c] == 0) throw DataError("class_thresholds: class " + std::to_string(c) + " is empty");
        sum[c] = std::clamp(sum[c] / static_cast<double>(count[c]), lo[c], hi[c]);
    }
    return sum;
}

std::string FilterPolicy::describe() const {
    switch (kind) {
    case Kind::none: return "none";
    case Kind::threshold: return "threshold";
    case Kind::per_class_count: {
        std::ostringstream s;
        s << "count:";
        for (std::size_t c = 0; c < counts.size(); ++c) s << (c ? "/" : "") << counts[c];
        return s.str();
    }
    }
    return "unknown";
}

FilterPolicy FilterPolicy::parse(const std::string& text, int class_count) {
    if (text == "none") return none();
    if (text == "threshold") return threshold();
    if (text.rfind("count:", 0) == 0) {
        std::vector<std::size_t> counts;
        std::stringstream body(text.substr(6));
        std::string item;
        while (std::getline(body, item, '/')) {
            std::size_t used = 0;
            const unsigned long v = std::stoul(item, &used);
            if (used != item.size()) throw std::invalid_argument("bad filter count '" + item + "'");
            counts.push_back(v);
        }
        if (counts.size() == 1) counts.assign(static_cast<std::size_t>(class_count), counts.front());
        if (static_cast<int>(counts.size()) != class_count)
            throw std::invalid_argument("filter policy: expected " + std::to_string(class_count) + " counts");
        return per_class(std::move(counts));
    }
    throw std::invalid_argument("unknown filter policy '" + text + "'");
}

FilterModel make_filter_model(const GabrielGraph& graph, const Dataset& data, MembershipKind kind,
                              double sigma, FilterPolicy policy) {
    if (kind == MembershipKind::distance && !(sigma > 0.0))
        throw std::invalid_argument("filter: sigma must be positive");
    FilterModel model;
    model.kind = kind;
    model.sigma = sigma;
    model.memberships = kind == MembershipKind::distance ? memberships_distance(graph, data, sigma)
                                                         : memberships_cardinality(graph, data);
    model.thresholds = class_thresholds({model.memberships.data(), static_cast<std::size_t>(model.memberships.size())},
                                        data.labels(), data.class_count());
    model.policy = std::move(policy);
    return model;
}

FilterResult filter_samples(const Dataset& data, const FilterModel& filter) {
    const std::size_t m = data.size();
    if (static_cast<std::size_t>(filter.memberships.size()) != m)
        throw std::invalid_argument("filter_samples: membership vector does not match dataset");
    const auto sizes = data.class_sizes();
    std::vector<char> drop(m, 0);

    switch (filter.policy.kind) {
    case FilterPolicy::Kind::none: break;
    case FilterPolicy::Kind::threshold:
        for (std::size_t i = 0; i < m; ++i)
            drop[i] = filter.memberships(static_cast<Eigen::Index>(i)) <
                      filter.thresholds[static_cast<std::size_t>(data.label(i))];
        break;
    case FilterPolicy::Kind::per_class_count: {
        const auto& counts = filter.policy.counts;
        if (counts.size() != sizes.size()) throw std::invalid_argument("filter_samples: one count per class required");
        for (std::size_t c = 0; c < sizes.size(); ++c) {
            if (counts[c] > 0 && counts[c] >= sizes[c])
                throw std::invalid_argument("filter_samples: count " + std::to_string(counts[c]) +
                                            " for class " + std::to_string(c) + " reaches its size " +
                                            std::to_string(sizes[c]));
            IndexList members;
            for (std::size_t i = 0; i < m; ++i)
                if (data.label(i) == static_cast<int>(c)) members.push_back(i);
            std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
                return filter.memberships(static_cast<Eigen::Index>(a)) <
                       filter.memberships(static_cast<Eigen::Index>(b));
            });
            for (std::size_t r = 0; r < counts[c]; ++r) drop[members[r]] = 1;
        }
        break;
    }
    }

    FilterResult result;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        if (sizes[c] == 0) continue;
        bool survivor = false;
        std::size_t best = m;
        for (std::size_t i = 0; i < m; ++i) {
            if (data.label(i) != static_cast<int>(c)) continue;
            survivor = survivor || !drop[i];
            if (best == m || filter.memberships(static_cast<Eigen::Index>(i)) >
                                 filter.memberships(static_cast<Eigen::Index>(best)))
                best = i;
        }
        if (!survivor) {
            drop[best] = 0;
            result.guarded_classes.push_back(static_cast<int>(c));
        }
    }
    for (std::size_t i = 0; i < m; ++i) (drop[i] ? result.removed : result.kept).push_back(i);
    return result;
}

void write_membership_report(std::ostream& out, const GabrielGraph& graph, const Dataset& data,
                             const FilterModel& filter, const FilterResult& result) {
    const Eigen::VectorXd q = memberships_cardinality(graph, data);
    const Eigen::VectorXd qd = memberships_distance(graph, data, filter.sigma);
    std::vector<char> removed(data.size(), 0);
    for (std::size_t i : result.removed) removed[i] = 1;

    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    out << "sample_index,class,q,q_d,threshold,removed_flag\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        out << graph.sample_ids[i] << ',' << data.class_names()[static_cast<std::size_t>(data.label(i))] << ','
            << q(row) << ',' << qd(row) << ',' << filter.thresholds[static_cast<std::size_t>(data.label(i))] << ','
            << (removed[i] ? 1 : 0) << '\n';
    }
    out.precision(old_precision);
}

} // namespace ggc
