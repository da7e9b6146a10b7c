#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "slge/error.hpp"
#include "slge/mapper.hpp"

using namespace slge;

namespace {

using EdgeSet = std::set<Edge>;

constexpr NodeId kIn = CellGraph::input();
constexpr NodeId kOut = CellGraph::output();

/// Same cell with conv ids shuffled.
CellGraph relabel(const CellGraph& g, Rng& rng) {
  std::vector<NodeId> convs;
  for (const auto& n : g.nodes()) {
    if (n.kind == NodeKind::Conv) convs.push_back(n.id);
  }
  std::shuffle(convs.begin(), convs.end(), rng);
  std::vector<NodeId> map(g.nodes().size());
  map[kIn] = kIn;
  map[kOut] = kOut;
  CellGraph out;
  for (NodeId old : convs) map[old] = out.add_conv(g.node(old).op);
  for (const auto& [a, b] : g.edges()) out.add_edge(map[a], map[b]);
  return out;
}

std::size_t count_substr(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

std::string read(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("transform on a one-node subgraph") {
  SUBCASE("SEQ") {
    auto g = GeneSubgraph::seed(ConvOp::Conv1x1);
    const NodeId p = g.parent;
    const NodeId c = transform(g, ProgramSymbol::Seq, p, ConvOp::Conv3x3);
    CHECK(g.graph.edges() == EdgeSet{{kIn, p}, {p, c}, {c, kOut}});
  }
  SUBCASE("CPI") {
    auto g = GeneSubgraph::seed(ConvOp::Conv1x1);
    const NodeId p = g.parent;
    const NodeId c = transform(g, ProgramSymbol::Cpi, p, ConvOp::Conv3x3);
    CHECK(g.graph.edges() == EdgeSet{{kIn, p}, {kIn, c}, {p, c}, {c, kOut}});
  }
  SUBCASE("CPO") {
    auto g = GeneSubgraph::seed(ConvOp::Conv1x1);
    const NodeId p = g.parent;
    const NodeId c = transform(g, ProgramSymbol::Cpo, p, ConvOp::Conv3x3);
    CHECK(g.graph.edges() == EdgeSet{{kIn, p}, {p, c}, {p, kOut}, {c, kOut}});
  }
  SUBCASE("END is not a transformation") {
    auto g = GeneSubgraph::seed(ConvOp::Conv1x1);
    CHECK_THROWS_AS(transform(g, ProgramSymbol::End, g.parent, ConvOp::Conv1x1), Error);
  }
  SUBCASE("parent must be a conv node") {
    auto g = GeneSubgraph::seed(ConvOp::Conv1x1);
    CHECK_THROWS_AS(transform(g, ProgramSymbol::Seq, kIn, ConvOp::Conv1x1), Error);
  }
}

TEST_CASE("CPI chain gives the child every input of its parent") {
  auto g = GeneSubgraph::seed(ConvOp::Conv1x1);
  const NodeId a = transform(g, ProgramSymbol::Cpi, g.parent, ConvOp::Conv1x3);
  const NodeId b = transform(g, ProgramSymbol::Cpi, a, ConvOp::Conv3x1);
  CHECK(g.graph.predecessors(b) == std::vector<NodeId>{kIn, a - 1, a});
  CHECK(g.graph.edges().size() == 7);
  CHECK(g.graph.check_invariants().empty());
}

TEST_CASE("Fig. 1 develops into the Fig. 2 cell") {
  const auto cell = develop(decode_text(oracle::kFig1Text));
  const auto expected = oracle::fig2_cell();
  CHECK(cell.conv_count() == 8);
  CHECK(cell.nodes().size() == 10);
  CHECK(cell.edges().size() == 16);
  CHECK(canonical_form(cell) == canonical_form(expected));
  CHECK(isomorphic(cell, expected));
  CHECK(cell.check_invariants().empty());
  CHECK(cell.successors(kIn).size() == 2);
  CHECK(cell.predecessors(kOut).size() == 8);
}

TEST_CASE("Fig. 2 cell JSON matches the golden file") {
  const auto cell = develop(decode_text(oracle::kFig1Text));
  std::string golden = read(std::string(SLGE_GOLDEN) + "/fig2_cell.json");
  while (!golden.empty() && golden.back() == '\n') golden.pop_back();
  CHECK(to_json(cell) == golden);
}

TEST_CASE("cell JSON shape") {
  const auto cell = develop(decode_text(oracle::kFig1Text));
  const auto j = nlohmann::json::parse(to_json(cell));
  REQUIRE(j["nodes"].size() == 10);
  CHECK(j["nodes"][0]["kind"] == "input");
  CHECK(j["nodes"][1]["kind"] == "output");
  CHECK_FALSE(j["nodes"][0].contains("op"));
  for (std::size_t i = 2; i < 10; ++i) {
    CHECK(j["nodes"][i]["kind"] == "conv");
    CHECK(j["nodes"][i]["id"] == i);
    CHECK(j["nodes"][i]["op"].is_string());
  }
  CHECK(j["edges"].size() == 16);
  Rng rng(5);
  CHECK(to_json(relabel(cell, rng)) == to_json(cell));
}

TEST_CASE("all-SEQ gene develops into a chain") {
  const auto cell = develop(decode_text("SEQ,SEQ|Conv1x1,Conv3x3,Conv3x3"));
  REQUIRE(cell.conv_count() == 3);
  CHECK(cell.edges() == EdgeSet{{kIn, 2}, {2, 3}, {3, 4}, {4, kOut}});
  CHECK(cell.node(2).op == ConvOp::Conv1x1);
  CHECK(cell.node(3).op == ConvOp::Conv3x3);
}

TEST_CASE("END stops the whole development") {
  const auto cell =
      develop(decode_text("END,SEQ|Conv3x3,Conv1x1,Conv1x1;SEQ,SEQ|Conv1x1,Conv1x1,Conv1x1"));
  CHECK(cell.conv_count() == 1);
  CHECK(cell.node(2).op == ConvOp::Conv3x3);
  CHECK(cell.edges() == EdgeSet{{kIn, 2}, {2, kOut}});
  const auto dot = to_dot(cell);
  CHECK(count_substr(dot, "[label=") == 3);
  CHECK(count_substr(dot, "->") == 2);

  const auto mid = develop(
      decode_text("SEQ,END,CPO|Conv3x3,Conv1x1,Conv1x3,Conv3x1;CPO,CPO,CPO|Conv1x1,Conv1x1,Conv1x1,Conv1x1"));
  CHECK(mid.conv_count() == 2);

  // END in the second gene keeps the first gene and the prefix of the second.
  const auto late = develop(
      decode_text("CPO,CPO|Conv1x1,Conv1x1,Conv1x1;SEQ,END|Conv3x3,Conv3x3,Conv3x3"));
  CHECK(late.conv_count() == 5);
}

TEST_CASE("merge identifies Input and Output") {
  CellGraph dag;
  merge(dag, GeneSubgraph::seed(ConvOp::Conv1x1));
  merge(dag, GeneSubgraph::seed(ConvOp::Conv3x3));
  CHECK(dag.successors(kIn).size() == 2);
  CHECK(dag.predecessors(kOut).size() == 2);
  CHECK(dag.is_acyclic());
  CHECK(dag.conv_count() == 2);
}

TEST_CASE("development keeps every intermediate graph acyclic") {
  Rng rng(2024);
  for (int i = 0; i < 10'000; ++i) {
    const GenomeConfig config(1 + i % 6, 1 + i % 4);
    const auto c = random_chromosome(config, rng);
    int steps = 0;
    bool acyclic = true;
    const auto cell = develop(c, [&](DevelopStage, const CellGraph& g) {
      ++steps;
      acyclic = acyclic && g.is_acyclic();
    });
    CHECK(steps >= 1);
    CHECK(acyclic);
    const auto problems = cell.check_invariants();
    if (!problems.empty()) FAIL(encode_text(c) << ": " << problems.front());
  }
}

TEST_CASE("node count without END is n * (h + 1)") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const GenomeConfig config(1 + i % 5, 1 + i % 3);
    auto c = random_chromosome(config, rng);
    for (auto& g : c.genes) {
      for (auto& e : g.head) {
        if (std::get<ProgramSymbol>(e) == ProgramSymbol::End) e = ProgramSymbol::Cpi;
      }
    }
    CHECK(develop(c).conv_count() ==
          static_cast<std::size_t>(config.gene_count() * config.tail_length()));
  }
}

TEST_CASE("all-SEQ and all-CPO structural motifs") {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const int h = 1 + i % 6;
    auto gene = random_chromosome(GenomeConfig(h, 1), rng);

    auto seq = gene;
    for (auto& e : seq.genes[0].head) e = ProgramSymbol::Seq;
    const auto chain = develop(seq);
    for (const auto& n : chain.nodes()) {
      if (n.kind != NodeKind::Conv) continue;
      CHECK(chain.predecessors(n.id).size() == 1);
      CHECK(chain.successors(n.id).size() == 1);
    }
    CHECK(oracle::longest_path(chain) == h + 2);

    auto cpo = gene;
    for (auto& e : cpo.genes[0].head) e = ProgramSymbol::Cpo;
    const auto fan = develop(cpo);
    for (const auto& n : fan.nodes()) {
      if (n.kind == NodeKind::Conv) CHECK(fan.has_edge(n.id, kOut));
    }
  }
}

TEST_CASE("develop is deterministic") {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto c = random_chromosome(GenomeConfig(4, 3), rng);
    CHECK(develop(c) == develop(c));
    CHECK(to_dot(develop(c)) == to_dot(develop(c)));
  }
}

TEST_CASE("canonical form agrees with brute-force isomorphism") {
  Rng rng(77);
  std::vector<CellGraph> cells;
  for (int i = 0; i < 120; ++i) {
    const GenomeConfig config(1 + i % 2, 1 + (i / 2) % 2);
    cells.push_back(develop(random_chromosome(config, rng)));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto shuffled = relabel(cells[i], rng);
    CHECK(canonical_form(shuffled) == canonical_form(cells[i]));
    CHECK(oracle::brute_isomorphic(canonicalize(cells[i]), cells[i]));
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      CHECK((canonical_form(cells[i]) == canonical_form(cells[j])) ==
            oracle::brute_isomorphic(cells[i], cells[j]));
    }
  }
}

TEST_CASE("canonical order keeps Input and Output first") {
  const auto cell = develop(decode_text(oracle::kFig1Text));
  const auto order = canonical_order(cell);
  REQUIRE(order.size() == 10);
  CHECK(order[0] == kIn);
  CHECK(order[1] == kOut);
  CHECK(std::set<NodeId>(order.begin(), order.end()).size() == 10);
}

TEST_CASE("DOT export of the Fig. 2 cell") {
  const auto cell = develop(decode_text(oracle::kFig1Text));
  const auto dot = to_dot(cell);
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(count_substr(dot, "[label=") == 10);
  CHECK(count_substr(dot, "->") == 16);
  CHECK(dot == to_dot(cell));
}

TEST_CASE("exhaustive h=1 n=1 micro-space") {
  const auto result = enumerate_cells(GenomeConfig(1, 1));
  CHECK(result.genotypes == 64);

  std::vector<CellGraph> distinct;
  for_each_gene(1, [&](const Gene& g) {
    const auto cell = develop(Chromosome{GenomeConfig(1, 1), {g}});
    for (const auto& d : distinct) {
      if (oracle::brute_isomorphic(d, cell)) return;
    }
    distinct.push_back(cell);
  });
  CHECK(distinct.size() == 52);
  CHECK(result.distinct_cells == distinct.size());
}

TEST_CASE("exhaustive enumeration guards") {
  CHECK_THROWS_AS(enumerate_cells(GenomeConfig(9, 1)), Error);
  CHECK_THROWS_AS(enumerate_cells(GenomeConfig(2, 3)), Error);
  CHECK(enumerate_cells(GenomeConfig(1, 2)).genotypes == 64 * 64);
}
