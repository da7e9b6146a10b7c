#pragma once

// Reference computations used by the tests. Each one is written against the
// plain graph/edge data and deliberately shares no code path with the
// library routine it checks.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "slge/assembler.hpp"
#include "slge/mapper.hpp"

namespace oracle {

inline const std::string kFig1Text =
    "CPO,CPO,CPO|Conv3x1,Conv1x3,Conv3x3,Conv3x3;"
    "CPO,CPO,CPO|Conv1x1,Conv3x3,Conv3x3,Conv3x3";

/// The Fig. 2 cell drawn by hand: two chains rooted at Input, each conv
/// feeding the next conv in its chain and the Output.
inline slge::CellGraph fig2_cell() {
  using slge::CellGraph;
  using slge::ConvOp;
  CellGraph g;
  const std::array<std::array<ConvOp, 4>, 2> chains{{
      {ConvOp::Conv3x1, ConvOp::Conv1x3, ConvOp::Conv3x3, ConvOp::Conv3x3},
      {ConvOp::Conv1x1, ConvOp::Conv3x3, ConvOp::Conv3x3, ConvOp::Conv3x3},
  }};
  for (const auto& chain : chains) {
    slge::NodeId prev = CellGraph::input();
    for (ConvOp op : chain) {
      const slge::NodeId id = g.add_conv(op);
      g.add_edge(prev, id);
      g.add_edge(id, CellGraph::output());
      prev = id;
    }
  }
  return g;
}

inline int label(const slge::CellNode& n) {
  return n.kind == slge::NodeKind::Conv ? 2 + static_cast<int>(n.op) : static_cast<int>(n.kind);
}

/// Isomorphism by trying every relabelling of the conv nodes.
inline bool brute_isomorphic(const slge::CellGraph& a, const slge::CellGraph& b) {
  if (a.nodes().size() != b.nodes().size() || a.edges().size() != b.edges().size()) return false;
  std::vector<slge::NodeId> perm(a.nodes().size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (std::size_t i = 0; i < perm.size() && ok; ++i) {
      ok = label(a.nodes()[i]) == label(b.nodes()[perm[i]]);
    }
    for (auto it = a.edges().begin(); ok && it != a.edges().end(); ++it) {
      ok = b.edges().count({perm[it->first], perm[it->second]}) == 1;
    }
    if (ok) return true;
  } while (std::next_permutation(perm.begin() + 2, perm.end()));
  return false;
}

/// Longest Input-to-Output path in edges, by enumerating every path.
inline int longest_path(const slge::CellGraph& g) {
  std::function<int(slge::NodeId)> walk = [&](slge::NodeId at) -> int {
    if (at == slge::CellGraph::output()) return 0;
    int best = -1;
    for (const auto& [from, to] : g.edges()) {
      if (from != at) continue;
      const int rest = walk(to);
      if (rest >= 0) best = std::max(best, rest + 1);
    }
    return best;
  };
  return walk(slge::CellGraph::input());
}

inline int kernel_area(slge::ConvOp op) {
  switch (op) {
    case slge::ConvOp::Conv1x1: return 1;
    case slge::ConvOp::Conv1x3: return 3;
    case slge::ConvOp::Conv3x1: return 3;
    case slge::ConvOp::Conv3x3: return 9;
  }
  return 0;
}

/// Closed-form parameter count: stem, cells, projections and classifier
/// written out from the counting convention, without the layer list.
inline std::uint64_t param_count(const slge::CellGraph& cell, const slge::MacroConfig& m) {
  std::uint64_t area_sum = 0;
  std::uint64_t convs = 0;
  std::uint64_t fan_in = 0;
  for (const auto& n : cell.nodes()) {
    if (n.kind != slge::NodeKind::Conv) continue;
    area_sum += kernel_area(n.op);
    ++convs;
  }
  for (const auto& e : cell.edges()) {
    if (e.second == slge::CellGraph::output()) ++fan_in;
  }
  const std::uint64_t c = m.stem_channels;
  std::uint64_t total = 9 * m.input.channels * c + 2 * c;
  std::uint64_t channels = c;
  for (int b = 0; b < 3; ++b) {
    const std::uint64_t w = c << b;
    for (int i = 0; i < m.blocks[b]; ++i) {
      if (channels != w) total += channels * w + 2 * w;
      total += area_sum * w * w + 2 * w * convs;
      channels = fan_in * w;
    }
  }
  return total + channels * m.num_classes + m.num_classes;
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

/// Runs a shell command and captures stdout (stderr is discarded unless the
/// command redirects it).
inline CommandResult run(const std::string& command) {
  CommandResult result;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (!pipe) return result;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, n);
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

inline std::string quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') {
      out += "'\\''";
    } else {
      out += ch;
    }
  }
  return out + "'";
}

}  // namespace oracle
