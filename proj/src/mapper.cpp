#include "slge/mapper.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "slge/error.hpp"

namespace slge {

CellGraph::CellGraph() {
  nodes_.push_back({input(), NodeKind::Input});
  nodes_.push_back({output(), NodeKind::Output});
}

NodeId CellGraph::add_conv(ConvOp op) {
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back({id, NodeKind::Conv, op});
  return id;
}

void CellGraph::add_edge(NodeId from, NodeId to) {
  if (from >= nodes_.size() || to >= nodes_.size()) {
    throw Error(ErrorCode::InvalidArgument, "edge references unknown node");
  }
  edges_.emplace(from, to);
}

void CellGraph::remove_edge(NodeId from, NodeId to) { edges_.erase({from, to}); }

bool CellGraph::has_edge(NodeId from, NodeId to) const {
  return edges_.contains({from, to});
}

std::vector<NodeId> CellGraph::successors(NodeId id) const {
  std::vector<NodeId> out;
  for (auto it = edges_.lower_bound({id, 0}); it != edges_.end() && it->first == id; ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::vector<NodeId> CellGraph::predecessors(NodeId id) const {
  std::vector<NodeId> out;
  for (const auto& [from, to] : edges_) {
    if (to == id) out.push_back(from);
  }
  return out;
}

const CellNode& CellGraph::node(NodeId id) const {
  if (id >= nodes_.size()) {
    throw Error(ErrorCode::InvalidArgument, "unknown node id " + std::to_string(id));
  }
  return nodes_[id];
}

std::vector<NodeId> CellGraph::topological_order() const {
  std::vector<std::size_t> in_degree(nodes_.size(), 0);
  for (const auto& edge : edges_) ++in_degree[edge.second];

  std::set<NodeId> ready;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (in_degree[id] == 0) ready.insert(id);
  }
  std::vector<NodeId> order;
  order.reserve(nodes_.size());
  while (!ready.empty()) {
    const NodeId id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (NodeId next : successors(id)) {
      if (--in_degree[next] == 0) ready.insert(next);
    }
  }
  if (order.size() != nodes_.size()) return {};
  return order;
}

bool CellGraph::is_acyclic() const { return !topological_order().empty(); }

namespace {

std::vector<bool> reachable(const CellGraph& graph, NodeId start, bool forward) {
  std::vector<bool> seen(graph.nodes().size(), false);
  std::deque<NodeId> frontier{start};
  seen[start] = true;
  while (!frontier.empty()) {
    const NodeId id = frontier.front();
    frontier.pop_front();
    for (NodeId next : forward ? graph.successors(id) : graph.predecessors(id)) {
      if (!seen[next]) {
        seen[next] = true;
        frontier.push_back(next);
      }
    }
  }
  return seen;
}

}  // namespace

std::vector<std::string> CellGraph::check_invariants() const {
  std::vector<std::string> problems;
  if (!is_acyclic()) problems.emplace_back("graph has a cycle");
  if (!predecessors(input()).empty()) problems.emplace_back("Input has incoming edges");
  if (!successors(output()).empty()) problems.emplace_back("Output has outgoing edges");
  const auto from_input = reachable(*this, input(), true);
  const auto to_output = reachable(*this, output(), false);
  for (const auto& node : nodes_) {
    if (node.kind != NodeKind::Conv) continue;
    if (!from_input[node.id] || !to_output[node.id]) {
      problems.push_back("conv node " + std::to_string(node.id) +
                         " is not on an Input-Output path");
    }
  }
  return problems;
}

GeneSubgraph GeneSubgraph::seed(ConvOp first) {
  GeneSubgraph out;
  out.parent = out.graph.add_conv(first);
  out.graph.add_edge(CellGraph::input(), out.parent);
  out.graph.add_edge(out.parent, CellGraph::output());
  return out;
}

NodeId transform(GeneSubgraph& gene, ProgramSymbol symbol, NodeId parent,
                 ConvOp child) {
  CellGraph& g = gene.graph;
  if (parent >= g.nodes().size() || g.node(parent).kind != NodeKind::Conv) {
    throw Error(ErrorCode::InvalidArgument, "transform parent must be a conv node");
  }
  const NodeId child_id = g.add_conv(child);
  const auto succ = g.successors(parent);
  switch (symbol) {
    case ProgramSymbol::Seq:
      for (NodeId node : succ) {
        g.add_edge(child_id, node);
        g.remove_edge(parent, node);
      }
      break;
    case ProgramSymbol::Cpi:
      for (NodeId node : g.predecessors(parent)) g.add_edge(node, child_id);
      for (NodeId node : succ) {
        g.add_edge(child_id, node);
        g.remove_edge(parent, node);
      }
      break;
    case ProgramSymbol::Cpo:
      for (NodeId node : succ) g.add_edge(child_id, node);
      break;
    case ProgramSymbol::End:
      throw Error(ErrorCode::InvalidArgument, "END has no graph transformation");
  }
  g.add_edge(parent, child_id);
  return child_id;
}

void merge(CellGraph& dag, const GeneSubgraph& gene) {
  const auto& nodes = gene.graph.nodes();
  std::vector<NodeId> remap(nodes.size());
  remap[CellGraph::input()] = CellGraph::input();
  remap[CellGraph::output()] = CellGraph::output();
  for (const auto& node : nodes) {
    if (node.kind == NodeKind::Conv) remap[node.id] = dag.add_conv(node.op);
  }
  for (const auto& [from, to] : gene.graph.edges()) {
    dag.add_edge(remap[from], remap[to]);
  }
}

CellGraph develop(const Chromosome& chromosome, const DevelopObserver& observer) {
  if (const auto violations = validate(chromosome); !violations.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "cannot develop invalid chromosome: " + to_string(violations.front()));
  }
  const auto notify = [&](DevelopStage stage, const CellGraph& graph) {
    if (observer) observer(stage, graph);
  };

  CellGraph dag;
  for (const Gene& gene : chromosome.genes) {
    std::deque<ConvOp> queue;
    for (const Element& e : gene.tail) queue.push_back(std::get<ConvOp>(e));

    GeneSubgraph sub = GeneSubgraph::seed(queue.front());
    queue.pop_front();
    std::size_t pos = 0;
    while (!queue.empty()) {
      const auto symbol = std::get<ProgramSymbol>(gene.head[pos]);
      if (symbol == ProgramSymbol::End) {
        merge(dag, sub);
        notify(DevelopStage::Merge, dag);
        return dag;
      }
      sub.parent = transform(sub, symbol, sub.parent, queue.front());
      queue.pop_front();
      notify(DevelopStage::Transform, sub.graph);
      ++pos;
    }
    merge(dag, sub);
    notify(DevelopStage::Merge, dag);
  }
  return dag;
}

Enumeration enumerate_cells(const GenomeConfig& config, std::uint64_t max_per_gene,
                            std::uint64_t max_genotypes) {
  const auto h = static_cast<std::uint64_t>(config.head_length());
  const auto n = static_cast<std::uint64_t>(config.gene_count());
  const std::uint64_t per_gene = genotype_count(h, 1, kProgramSymbols.size(), kConvOps.size());
  if (per_gene > max_per_gene) {
    throw Error(ErrorCode::InvalidArgument,
                "exhaustive enumeration refused: " + std::to_string(per_gene) +
                    " genes per position exceeds " + std::to_string(max_per_gene));
  }
  std::uint64_t total = 0;
  try {
    total = genotype_count(h, n, kProgramSymbols.size(), kConvOps.size());
  } catch (const Error&) {
    total = max_genotypes + 1;
  }
  if (total > max_genotypes) {
    throw Error(ErrorCode::InvalidArgument,
                "exhaustive enumeration refused: more than " + std::to_string(max_genotypes) +
                    " genotypes");
  }

  std::vector<Gene> genes;
  genes.reserve(per_gene);
  for_each_gene(config.head_length(), [&](const Gene& g) { genes.push_back(g); });

  std::set<std::string> forms;
  std::vector<std::size_t> digits(n, 0);
  Enumeration out;
  while (true) {
    Chromosome c{config, {}};
    for (std::size_t d : digits) c.genes.push_back(genes[d]);
    forms.insert(canonical_form(develop(c)));
    ++out.genotypes;

    std::size_t pos = digits.size();
    while (pos > 0) {
      --pos;
      if (++digits[pos] < genes.size()) break;
      digits[pos] = 0;
      if (pos == 0) {
        out.distinct_cells = forms.size();
        return out;
      }
    }
  }
}

}  // namespace slge
