#pragma once

// Genotype-to-phenotype development. A chromosome is read gene by gene; each
// head symbol rewrites a small per-gene graph by dividing its current parent
// node, and the finished gene graphs are joined at a shared Input and Output.

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "slge/genome.hpp"

namespace slge {

using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t { Input, Output, Conv };

struct CellNode {
  NodeId id;
  NodeKind kind;
  ConvOp op = ConvOp::Conv1x1;  // meaningful only for Conv nodes

  bool operator==(const CellNode&) const = default;
};

using Edge = std::pair<NodeId, NodeId>;

/// Directed graph with one Input (id 0) and one Output (id 1). Conv node ids
/// are dense and assigned in insertion order. Edges form a set, so adding an
/// existing edge is a no-op.
class CellGraph {
 public:
  CellGraph();

  static constexpr NodeId input() { return 0; }
  static constexpr NodeId output() { return 1; }

  NodeId add_conv(ConvOp op);
  void add_edge(NodeId from, NodeId to);
  void remove_edge(NodeId from, NodeId to);
  bool has_edge(NodeId from, NodeId to) const;

  std::vector<NodeId> successors(NodeId id) const;
  std::vector<NodeId> predecessors(NodeId id) const;

  const std::vector<CellNode>& nodes() const { return nodes_; }
  const std::set<Edge>& edges() const { return edges_; }
  const CellNode& node(NodeId id) const;
  std::size_t conv_count() const { return nodes_.size() - 2; }

  /// Node ids in a topological order (Kahn, smallest ready id first).
  /// Empty if the graph has a cycle.
  std::vector<NodeId> topological_order() const;
  bool is_acyclic() const;

  /// Empty when every structural invariant of a cell holds: acyclic, Input
  /// has no in-edges, Output has no out-edges, every conv node lies on an
  /// Input-to-Output path.
  std::vector<std::string> check_invariants() const;

  bool operator==(const CellGraph&) const = default;

 private:
  std::vector<CellNode> nodes_;
  std::set<Edge> edges_;
};

/// Graph developed from a single gene; tracks the node that the next
/// program symbol will divide.
struct GeneSubgraph {
  CellGraph graph;
  NodeId parent = CellGraph::input();

  /// Input -> first -> Output, with `first` as the parent.
  static GeneSubgraph seed(ConvOp first);
};

/// Divides `parent` according to `symbol`, creating a new conv node of type
/// `child`, and returns the new node's id. END is rejected with
/// Error(InvalidArgument); develop() handles it before calling here.
///
///   SEQ: child takes over parent's out-edges; parent -> child.
///   CPI: as SEQ, and child also receives every in-edge of parent.
///   CPO: child gets copies of parent's out-edges (parent keeps them);
///        parent -> child.
NodeId transform(GeneSubgraph& gene, ProgramSymbol symbol, NodeId parent,
                 ConvOp child);

/// Adds `gene` to `dag`, identifying the two Input nodes and the two Output
/// nodes. Conv nodes receive fresh ids in the gene's id order.
void merge(CellGraph& dag, const GeneSubgraph& gene);

enum class DevelopStage { Transform, Merge };

/// Called after every transform (with the gene subgraph) and after every
/// merge (with the cell so far).
using DevelopObserver =
    std::function<void(DevelopStage stage, const CellGraph& graph)>;

/// Develops a valid chromosome into a cell. An END symbol merges the gene
/// being developed and stops the whole development, so later genes are
/// ignored. Throws Error(InvalidArgument) for an invalid chromosome.
CellGraph develop(const Chromosome& chromosome,
                  const DevelopObserver& observer = {});

/// Isomorphism-invariant certificate of a cell; equal strings iff the two
/// cells are isomorphic (node kinds and conv ops preserved).
std::string canonical_form(const CellGraph& cell);

/// Permutation `order` such that order[k] is the original id placed at
/// canonical position k. Positions 0 and 1 always hold Input and Output, so
/// the relabelled graph keeps the CellGraph id convention.
std::vector<NodeId> canonical_order(const CellGraph& cell);

/// Same graph relabelled by canonical_order().
CellGraph canonicalize(const CellGraph& cell);

bool isomorphic(const CellGraph& a, const CellGraph& b);

std::string to_dot(const CellGraph& cell);

/// {"nodes":[{"id","kind","op"?}],"edges":[[from,to],...]} with canonical ids.
std::string to_json(const CellGraph& cell);

struct Enumeration {
  std::uint64_t genotypes = 0;
  std::uint64_t distinct_cells = 0;  // up to isomorphism
};

/// Develops every genotype of the given shape. Refuses (InvalidArgument)
/// when the per-gene count exceeds `max_per_gene` or the total genotype
/// count exceeds `max_genotypes`.
Enumeration enumerate_cells(const GenomeConfig& config, std::uint64_t max_per_gene = 100'000,
                            std::uint64_t max_genotypes = 1'000'000);

}  // namespace slge
