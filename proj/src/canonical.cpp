// Canonical labelling of cells by colour refinement with individualisation.
// Every leaf of the search tree is explored and the lexicographically
// smallest certificate wins, which makes the result exact. Cells are small
// (a few dozen nodes at most), so no automorphism pruning is done.

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "slge/mapper.hpp"

namespace slge {

namespace {

using Colors = std::vector<std::size_t>;

struct Adjacency {
  std::vector<std::vector<NodeId>> succ;
  std::vector<std::vector<NodeId>> pred;
};

Adjacency adjacency_of(const CellGraph& cell) {
  Adjacency adj;
  adj.succ.resize(cell.nodes().size());
  adj.pred.resize(cell.nodes().size());
  for (const auto& [from, to] : cell.edges()) {
    adj.succ[from].push_back(to);
    adj.pred[to].push_back(from);
  }
  return adj;
}

std::size_t kind_rank(const CellNode& node) {
  switch (node.kind) {
    case NodeKind::Input: return 0;
    case NodeKind::Conv: return 1 + static_cast<std::size_t>(node.op);
    case NodeKind::Output: return 5;
  }
  return 0;
}

std::size_t class_count(const Colors& colors) {
  Colors copy = colors;
  std::sort(copy.begin(), copy.end());
  return static_cast<std::size_t>(std::unique(copy.begin(), copy.end()) - copy.begin());
}

// Repeatedly splits colour classes by the multisets of neighbour colours.
// New colours are ranks of sorted signatures, so relative order of existing
// classes is preserved.
Colors refine(Colors colors, const Adjacency& adj) {
  using Signature = std::tuple<std::size_t, std::vector<std::size_t>, std::vector<std::size_t>>;
  std::size_t classes = class_count(colors);
  while (true) {
    std::vector<Signature> sigs(colors.size());
    for (std::size_t v = 0; v < colors.size(); ++v) {
      std::vector<std::size_t> in, out;
      for (NodeId p : adj.pred[v]) in.push_back(colors[p]);
      for (NodeId s : adj.succ[v]) out.push_back(colors[s]);
      std::sort(in.begin(), in.end());
      std::sort(out.begin(), out.end());
      sigs[v] = {colors[v], std::move(in), std::move(out)};
    }
    std::vector<Signature> unique_sigs = sigs;
    std::sort(unique_sigs.begin(), unique_sigs.end());
    unique_sigs.erase(std::unique(unique_sigs.begin(), unique_sigs.end()), unique_sigs.end());
    for (std::size_t v = 0; v < colors.size(); ++v) {
      colors[v] = static_cast<std::size_t>(
          std::lower_bound(unique_sigs.begin(), unique_sigs.end(), sigs[v]) -
          unique_sigs.begin());
    }
    const std::size_t next = unique_sigs.size();
    if (next == classes) return colors;
    classes = next;
  }
}

struct Leaf {
  std::vector<std::size_t> certificate;
  std::vector<NodeId> order;
};

Leaf make_leaf(const CellGraph& cell, const Colors& colors) {
  const std::size_t n = colors.size();
  std::vector<NodeId> order(n);
  for (NodeId v = 0; v < n; ++v) order[colors[v]] = v;

  Leaf leaf;
  leaf.order = order;
  leaf.certificate.push_back(n);
  for (NodeId v : order) leaf.certificate.push_back(kind_rank(cell.node(v)));
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& [from, to] : cell.edges()) edges.emplace_back(colors[from], colors[to]);
  std::sort(edges.begin(), edges.end());
  for (const auto& [a, b] : edges) {
    leaf.certificate.push_back(a);
    leaf.certificate.push_back(b);
  }
  return leaf;
}

void search(const CellGraph& cell, const Adjacency& adj, Colors colors,
            std::optional<Leaf>& best) {
  colors = refine(std::move(colors), adj);
  const std::size_t n = colors.size();
  if (class_count(colors) == n) {
    Leaf leaf = make_leaf(cell, colors);
    if (!best || leaf.certificate < best->certificate) best = std::move(leaf);
    return;
  }
  // First non-singleton class by colour.
  std::map<std::size_t, std::vector<NodeId>> classes;
  for (NodeId v = 0; v < n; ++v) classes[colors[v]].push_back(v);
  const auto target = std::find_if(classes.begin(), classes.end(),
                                   [](const auto& kv) { return kv.second.size() > 1; });
  for (NodeId pick : target->second) {
    Colors next(n);
    for (NodeId v = 0; v < n; ++v) {
      next[v] = 2 * colors[v] + ((colors[v] == target->first && v != pick) ? 1 : 0);
    }
    search(cell, adj, std::move(next), best);
  }
}

Leaf canonical_leaf(const CellGraph& cell) {
  const Adjacency adj = adjacency_of(cell);
  Colors initial(cell.nodes().size());
  for (const auto& node : cell.nodes()) initial[node.id] = kind_rank(node);
  std::optional<Leaf> best;
  search(cell, adj, std::move(initial), best);
  return *best;
}

}  // namespace

std::vector<NodeId> canonical_order(const CellGraph& cell) {
  const Leaf leaf = canonical_leaf(cell);
  // Input sorts first and Output last among refined colours; move Output to
  // position 1 to match the CellGraph id convention.
  std::vector<NodeId> order{CellGraph::input(), CellGraph::output()};
  for (NodeId v : leaf.order) {
    if (cell.node(v).kind == NodeKind::Conv) order.push_back(v);
  }
  return order;
}

CellGraph canonicalize(const CellGraph& cell) {
  const auto order = canonical_order(cell);
  std::vector<NodeId> position(order.size());
  for (NodeId k = 0; k < order.size(); ++k) position[order[k]] = k;
  CellGraph out;
  for (std::size_t k = 2; k < order.size(); ++k) out.add_conv(cell.node(order[k]).op);
  for (const auto& [from, to] : cell.edges()) out.add_edge(position[from], position[to]);
  return out;
}

std::string canonical_form(const CellGraph& cell) {
  const Leaf leaf = canonical_leaf(cell);
  std::ostringstream os;
  for (std::size_t i = 0; i < leaf.certificate.size(); ++i) {
    if (i > 0) os << ' ';
    os << leaf.certificate[i];
  }
  return os.str();
}

bool isomorphic(const CellGraph& a, const CellGraph& b) {
  if (a.nodes().size() != b.nodes().size() || a.edges().size() != b.edges().size()) {
    return false;
  }
  return canonical_form(a) == canonical_form(b);
}

namespace {

std::string node_label(const CellNode& node) {
  switch (node.kind) {
    case NodeKind::Input: return "Input";
    case NodeKind::Output: return "Output";
    case NodeKind::Conv: return std::string(to_string(node.op));
  }
  return {};
}

}  // namespace

std::string to_dot(const CellGraph& cell) {
  std::ostringstream os;
  os << "digraph cell {\n";
  for (const auto& node : cell.nodes()) {
    os << "  n" << node.id << " [label=\"" << node_label(node) << "\"";
    if (node.kind != NodeKind::Conv) os << ", shape=box, style=rounded";
    os << "];\n";
  }
  for (const auto& [from, to] : cell.edges()) {
    os << "  n" << from << " -> n" << to << ";\n";
  }
  os << "}\n";
  return os.str();
}

std::string to_json(const CellGraph& cell) {
  const CellGraph canon = canonicalize(cell);
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& node : canon.nodes()) {
    nlohmann::json j;
    j["id"] = node.id;
    switch (node.kind) {
      case NodeKind::Input: j["kind"] = "input"; break;
      case NodeKind::Output: j["kind"] = "output"; break;
      case NodeKind::Conv:
        j["kind"] = "conv";
        j["op"] = to_string(node.op);
        break;
    }
    nodes.push_back(std::move(j));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [from, to] : canon.edges()) edges.push_back({from, to});
  nlohmann::json out;
  out["nodes"] = std::move(nodes);
  out["edges"] = std::move(edges);
  return out.dump();
}

}  // namespace slge
