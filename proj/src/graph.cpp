#include "ggclass/graph.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ggc {

namespace {

using DistanceMatrix = Eigen::MatrixXd;

DistanceMatrix pairwise_squared_distances(const Dataset& data) {
    const auto m = static_cast<Eigen::Index>(data.size());
    const Eigen::Index n = data.dim();
    DistanceMatrix dist(m, m);
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index j = 0; j < m; ++j) {
        dist(j, j) = 0.0;
        for (Eigen::Index k = j + 1; k < m; ++k) {
            const double d = squared_distance(data.row_ptr(static_cast<std::size_t>(j)),
                                              data.row_ptr(static_cast<std::size_t>(k)), n);
            dist(j, k) = d;
            dist(k, j) = d;
        }
    }
    return dist;
}

void require_buildable(const Dataset& data) {
    if (data.size() < 2) throw std::invalid_argument("gabriel graph: need at least two samples");
}

GabrielGraph empty_graph(std::size_t m) {
    GabrielGraph g;
    g.adjacency = AdjacencyMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    g.sample_ids.resize(m);
    std::iota(g.sample_ids.begin(), g.sample_ids.end(), std::size_t{0});
    return g;
}

} // namespace

std::int32_t GabrielGraph::witnesses(std::size_t j, std::size_t k) const {
    if (!witness_counts) throw std::logic_error("gabriel graph: witness counts not available");
    if (j == k) return 0;
    const auto lo = static_cast<Eigen::Index>(std::min(j, k));
    const auto hi = static_cast<Eigen::Index>(std::max(j, k));
    return (*witness_counts)(lo, hi);
}

IndexList GabrielGraph::neighbors(std::size_t i) const {
    IndexList out;
    const auto col = adjacency.col(static_cast<Eigen::Index>(i));
    for (Eigen::Index k = 0; k < col.size(); ++k)
        if (col(k)) out.push_back(static_cast<std::size_t>(k));
    return out;
}

std::size_t GabrielGraph::degree(std::size_t i) const {
    return static_cast<std::size_t>(adjacency.col(static_cast<Eigen::Index>(i)).cast<int>().sum());
}

std::size_t GabrielGraph::edge_count() const {
    return static_cast<std::size_t>(adjacency.cast<std::int64_t>().sum() / 2);
}

std::vector<std::pair<std::size_t, std::size_t>> GabrielGraph::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const std::size_t m = size();
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = j + 1; k < m; ++k)
            if (has_edge(j, k)) out.emplace_back(j, k);
    return out;
}

bool is_gabriel_edge(const Dataset& data, std::size_t j, std::size_t k) {
    const std::size_t m = data.size();
    if (j >= m || k >= m) throw std::out_of_range("is_gabriel_edge: index out of range");
    if (j == k) throw std::invalid_argument("is_gabriel_edge: j and k must differ");
    const Eigen::Index n = data.dim();
    const double djk = squared_distance(data.row_ptr(j), data.row_ptr(k), n);
    for (std::size_t i = 0; i < m; ++i) {
        if (i == j || i == k) continue;
        const double dji = squared_distance(data.row_ptr(j), data.row_ptr(i), n);
        const double dki = squared_distance(data.row_ptr(k), data.row_ptr(i), n);
        if (djk > dji + dki) return false;
    }
    return true;
}

GabrielGraph build_graph(const Dataset& data) {
    require_buildable(data);
    const auto m = static_cast<Eigen::Index>(data.size());
    const DistanceMatrix dist = pairwise_squared_distances(data);
    GabrielGraph g = empty_graph(data.size());

#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index j = 0; j < m - 1; ++j) {
        const double* dj = dist.col(j).data();
        for (Eigen::Index k = j + 1; k < m; ++k) {
            const double* dk = dist.col(k).data();
            const double djk = dj[k];
            bool edge = true;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (djk > dj[i] + dk[i]) {
                    edge = false;
                    break;
                }
            }
            if (edge) {
                g.adjacency(j, k) = 1;
                g.adjacency(k, j) = 1;
            }
        }
    }
    return g;
}

GabrielGraph build_graph_with_witness(const Dataset& data) {
    require_buildable(data);
    const auto m = static_cast<Eigen::Index>(data.size());
    const DistanceMatrix dist = pairwise_squared_distances(data);
    GabrielGraph g = empty_graph(data.size());
    WitnessMatrix w = WitnessMatrix::Zero(m, m);

#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index j = 0; j < m - 1; ++j) {
        const double* dj = dist.col(j).data();
        for (Eigen::Index k = j + 1; k < m; ++k) {
            const double* dk = dist.col(k).data();
            const double djk = dj[k];
            std::int32_t count = 0;
            for (Eigen::Index i = 0; i < m; ++i) count += (djk > dj[i] + dk[i]) ? 1 : 0;
            w(j, k) = count;
            if (count == 0) {
                g.adjacency(j, k) = 1;
                g.adjacency(k, j) = 1;
            }
        }
    }
    g.witness_counts = std::move(w);
    return g;
}

GabrielGraph recompute_after_removal(const GabrielGraph& graph, const Dataset& data,
                                     std::span<const std::size_t> removed) {
    if (!graph.witness_counts)
        throw std::invalid_argument("recompute_after_removal: graph has no witness counts");
    const std::size_t m = data.size();
    if (graph.size() != m)
        throw std::invalid_argument("recompute_after_removal: graph and dataset sizes differ");

    std::vector<char> is_removed(m, 0);
    for (std::size_t i : removed) {
        if (i >= m) throw std::out_of_range("recompute_after_removal: removed index out of range");
        is_removed[i] = 1;
    }
    IndexList gone;
    IndexList kept;
    for (std::size_t i = 0; i < m; ++i) (is_removed[i] ? gone : kept).push_back(i);
    if (kept.size() < 2)
        throw std::invalid_argument("recompute_after_removal: fewer than two samples survive");

    const auto mr = static_cast<Eigen::Index>(kept.size());
    const auto r = static_cast<Eigen::Index>(gone.size());
    const WitnessMatrix& w = *graph.witness_counts;

    GabrielGraph out;
    out.adjacency = AdjacencyMatrix::Zero(mr, mr);
    out.sample_ids.reserve(kept.size());
    for (std::size_t i : kept) out.sample_ids.push_back(graph.sample_ids[i]);

    const DistanceMatrix dist = pairwise_squared_distances(data.subset(kept));

    // Surviving neighbours in the old graph, in new indices; tried first as witnesses.
    std::vector<Eigen::Index> new_index(m, -1);
    for (Eigen::Index a = 0; a < mr; ++a) new_index[kept[static_cast<std::size_t>(a)]] = a;
    std::vector<std::vector<Eigen::Index>> near(static_cast<std::size_t>(mr));
#pragma omp parallel for schedule(static)
    for (Eigen::Index a = 0; a < mr; ++a)
        for (std::size_t v : graph.neighbors(kept[static_cast<std::size_t>(a)]))
            if (new_index[v] >= 0) near[static_cast<std::size_t>(a)].push_back(new_index[v]);

#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index a = 0; a < mr - 1; ++a) {
        const auto j = static_cast<Eigen::Index>(kept[static_cast<std::size_t>(a)]);
        const double* da = dist.col(a).data();
        const auto& na = near[static_cast<std::size_t>(a)];
        for (Eigen::Index b = a + 1; b < mr; ++b) {
            const std::int32_t need = w(j, static_cast<Eigen::Index>(kept[static_cast<std::size_t>(b)]));
            bool edge = (need == 0);
            // More witnesses than removed samples: at least one witness survived.
            if (!edge && need <= r) {
                // Edge iff no survivor is a witness.
                const double* db = dist.col(b).data();
                const double dab = da[b];
                const auto witness = [&](Eigen::Index i) { return dab > da[i] + db[i]; };
                edge = std::none_of(na.begin(), na.end(), witness);
                for (Eigen::Index i = 0; edge && i < mr; ++i) edge = !witness(i);
            }
            if (edge) {
                out.adjacency(a, b) = 1;
                out.adjacency(b, a) = 1;
            }
        }
    }
    return out;
}

bool is_connected(const GabrielGraph& graph) {
    const std::size_t m = graph.size();
    if (m == 0) return true;
    std::vector<char> seen(m, 0);
    IndexList stack{0};
    seen[0] = 1;
    std::size_t visited = 1;
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t u : graph.neighbors(v)) {
            if (!seen[u]) {
                seen[u] = 1;
                ++visited;
                stack.push_back(u);
            }
        }
    }
    return visited == m;
}

std::optional<SupportStructure> extract_support(const GabrielGraph& graph, const Dataset& data) {
    if (graph.size() != data.size())
        throw std::invalid_argument("extract_support: graph and dataset sizes differ");
    SupportStructure support;
    std::vector<char> is_ssv(data.size(), 0);
    for (const auto& [j, k] : graph.edges()) {
        if (data.label(j) == data.label(k)) continue;
        SupportEdge edge;
        edge.j = j;
        edge.k = k;
        const Eigen::Map<const Eigen::VectorXd> xj(data.row_ptr(j), data.dim());
        const Eigen::Map<const Eigen::VectorXd> xk(data.row_ptr(k), data.dim());
        edge.midpoint = (xj + xk) / 2.0;
        edge.class_j = data.label(j);
        edge.class_k = data.label(k);
        support.edges.push_back(std::move(edge));
        is_ssv[j] = 1;
        is_ssv[k] = 1;
    }
    if (support.edges.empty()) return std::nullopt;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!is_ssv[i]) continue;
        support.ssvs.push_back(
            {i, Eigen::Map<const Eigen::VectorXd>(data.row_ptr(i), data.dim()), data.label(i)});
    }
    return support;
}

void write_dot(std::ostream& out, const GabrielGraph& graph, const Dataset& data) {
    if (graph.size() != data.size())
        throw std::invalid_argument("write_dot: graph and dataset sizes differ");
    out << "graph gabriel {\n";
    for (std::size_t i = 0; i < graph.size(); ++i)
        out << "  " << graph.sample_ids[i] << " [class=\"" << data.class_names()[data.label(i)]
            << "\"];\n";
    for (const auto& [j, k] : graph.edges()) {
        const bool support = data.label(j) != data.label(k);
        out << "  " << graph.sample_ids[j] << " -- " << graph.sample_ids[k]
            << " [support=" << (support ? "true" : "false") << "];\n";
    }
    out << "}\n";
}

void write_adjacency_csv(std::ostream& out, const GabrielGraph& graph, const Dataset& data,
                         bool include_witness) {
    if (graph.size() != data.size())
        throw std::invalid_argument("write_adjacency_csv: graph and dataset sizes differ");
    if (include_witness && !graph.witness_counts)
        throw std::invalid_argument("write_adjacency_csv: graph has no witness counts");
    const std::size_t m = graph.size();
    if (!include_witness) {
        out << "i,j,support\n";
        for (const auto& [j, k] : graph.edges())
            out << graph.sample_ids[j] << ',' << graph.sample_ids[k] << ','
                << (data.label(j) != data.label(k) ? 1 : 0) << '\n';
        return;
    }
    out << "i,j,edge,support,witnesses\n";
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = j + 1; k < m; ++k) {
            const bool edge = graph.has_edge(j, k);
            out << graph.sample_ids[j] << ',' << graph.sample_ids[k] << ',' << (edge ? 1 : 0) << ','
                << (edge && data.label(j) != data.label(k) ? 1 : 0) << ',' << graph.witnesses(j, k)
                << '\n';
        }
}

} // namespace ggc
