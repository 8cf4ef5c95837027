#pragma once

#include "ggclass/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace ggc {

using AdjacencyMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
/// Only the strict upper triangle (j < k) is meaningful.
using WitnessMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Symmetric Gabriel graph over the rows of a dataset.
struct GabrielGraph {
    AdjacencyMatrix adjacency;
    /// W(j,k), j < k: samples strictly inside the diametral sphere of (j,k).
    std::optional<WitnessMatrix> witness_counts;
    /// Graph vertex -> row of the dataset the graph was first built on.
    IndexList sample_ids;

    std::size_t size() const { return static_cast<std::size_t>(adjacency.rows()); }
    bool has_edge(std::size_t j, std::size_t k) const {
        return adjacency(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) != 0;
    }
    std::int32_t witnesses(std::size_t j, std::size_t k) const;
    IndexList neighbors(std::size_t i) const;
    std::size_t degree(std::size_t i) const;
    std::size_t edge_count() const;
    /// Edges as (j, k) with j < k, lexicographic order.
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;
};

/// Pairwise test of the Gabriel condition by direct enumeration of all other samples.
///
/// A third sample blocks (j,k) only when it lies strictly inside the sphere:
/// |Xj-Xk|^2 > |Xj-Xi|^2 + |Xk-Xi|^2. Samples on the boundary do not block.
bool is_gabriel_edge(const Dataset& data, std::size_t j, std::size_t k);

/// Classic construction, stopping at the first blocking sample of each pair.
GabrielGraph build_graph(const Dataset& data);

/// Full construction that also counts every blocking sample per pair.
GabrielGraph build_graph_with_witness(const Dataset& data);

/// Gabriel graph of the samples that remain after deleting `removed`.
///
/// Uses the witness counts of `graph` (built on `data`): a surviving pair is an
/// edge exactly when every one of its witnesses was removed. The result equals
/// build_graph() on the survivors; survivors keep their relative order.
GabrielGraph recompute_after_removal(const GabrielGraph& graph, const Dataset& data,
                                     std::span<const std::size_t> removed);

bool is_connected(const GabrielGraph& graph);

struct SupportEdge {
    std::size_t j = 0;
    std::size_t k = 0;
    Eigen::VectorXd midpoint;
    int class_j = 0;
    int class_k = 0;
};

struct StructuralSupportVector {
    std::size_t index = 0;
    Eigen::VectorXd center;
    int label = 0;
};

/// Cross-class edges of a graph and their deduplicated endpoints.
struct SupportStructure {
    std::vector<SupportEdge> edges;
    std::vector<StructuralSupportVector> ssvs; // sorted by index
};

/// Support edges and structural support vectors. `std::nullopt` when the graph
/// has no edge between different classes.
std::optional<SupportStructure> extract_support(const GabrielGraph& graph, const Dataset& data);

/// DOT export: node id = original sample index, `class` attribute per node and
/// `support=true|false` per edge.
void write_dot(std::ostream& out, const GabrielGraph& graph, const Dataset& data);

/// One line per edge: i,j,support (original sample indices). With `include_witness`
/// every pair is listed as i,j,edge,support,witnesses.
void write_adjacency_csv(std::ostream& out, const GabrielGraph& graph, const Dataset& data,
                         bool include_witness = false);

} // namespace ggc
