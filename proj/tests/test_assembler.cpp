#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "slge/assembler.hpp"
#include "slge/error.hpp"

using namespace slge;

namespace {

CellGraph fig2() { return develop(decode_text(oracle::kFig1Text)); }

CellGraph single_conv() { return develop(decode_text("END|Conv3x3,Conv1x1")); }

MacroConfig macro(int c, std::array<int, 3> blocks) {
  MacroConfig m;
  m.stem_channels = c;
  m.blocks = blocks;
  return m;
}

std::vector<const Layer*> of_kind(const NetworkSpec& spec, LayerKind kind) {
  std::vector<const Layer*> out;
  for (const auto& l : spec.layers) {
    if (l.kind == kind) out.push_back(&l);
  }
  return out;
}

}  // namespace

TEST_CASE("stem parameter arithmetic") {
  const auto spec = assemble(single_conv(), macro(16, {1, 1, 1}));
  REQUIRE(spec.layers.front().kind == LayerKind::Stem);
  CHECK(spec.layers.front().param_count == 464);
}

TEST_CASE("Fig. 2 network at C=40, B=[3,3,1]") {
  const auto spec = assemble(fig2(), macro(40, {3, 3, 1}));
  CHECK(output_fan_in(spec.cell) == 8);

  const auto cells = of_kind(spec, LayerKind::CellInstance);
  REQUIRE(cells.size() == 7);
  const std::array<int, 7> widths{40, 40, 40, 80, 80, 80, 160};
  const std::array<int, 7> sizes{32, 32, 32, 16, 16, 16, 8};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(cells[i]->node_width == widths[i]);
    CHECK(cells[i]->out_channels == 8 * widths[i]);
    CHECK(cells[i]->in_channels == widths[i]);
    CHECK(cells[i]->in_height == sizes[i]);
  }
  CHECK(of_kind(spec, LayerKind::MaxPool).size() == 2);
  CHECK(of_kind(spec, LayerKind::Projection).size() == 6);

  // Hand count: cell = 52 W^2 + 16 W, projection = 8 W_prev W + 2 W.
  const std::uint64_t expected = 1160 + 3 * (52 * 1600 + 16 * 40) + 2 * (320 * 40 + 80) +
                                 (320 * 80 + 160) + 3 * (52 * 6400 + 16 * 80) +
                                 2 * (640 * 80 + 160) + (640 * 160 + 320) +
                                 (52 * 25600 + 16 * 160) + 1280 * 10 + 10;
  CHECK(expected == 2'858'450);
  CHECK(count_params(spec) == expected);
  CHECK(count_params(spec) == oracle::param_count(spec.cell, spec.macro));

  const double ratio = static_cast<double>(count_params(spec)) / 2.8e6;
  CHECK(ratio > 0.85);
  CHECK(ratio < 1.15);
  CHECK(check_constraint(spec, 3'500'000).ok());
}

TEST_CASE("search-time network of a single-conv cell") {
  const auto spec = assemble(single_conv(), macro(16, {1, 1, 1}));
  std::vector<LayerKind> kinds;
  for (const auto& l : spec.layers) kinds.push_back(l.kind);
  CHECK(kinds == std::vector<LayerKind>{LayerKind::Stem, LayerKind::CellInstance,
                                        LayerKind::MaxPool, LayerKind::Projection,
                                        LayerKind::CellInstance, LayerKind::MaxPool,
                                        LayerKind::Projection, LayerKind::CellInstance,
                                        LayerKind::GlobalPool, LayerKind::Classifier});
  const auto cells = of_kind(spec, LayerKind::CellInstance);
  CHECK(cells[0]->param_count == 9 * 16 * 16 + 32);
  CHECK(cells[1]->param_count == 9 * 32 * 32 + 64);
  CHECK(cells[2]->param_count == 9 * 64 * 64 + 128);
  CHECK(cells[2]->in_height == 8);
  CHECK(spec.layers[3].param_count == 16 * 32 + 64);
  CHECK(spec.layers.back().param_count == 64 * 10 + 10);
  CHECK(count_params(spec) == oracle::param_count(spec.cell, spec.macro));
}

TEST_CASE("consecutive layers chain channels and spatial dims") {
  Rng rng(17);
  for (int i = 0; i < 300; ++i) {
    const auto cell = develop(random_chromosome(GenomeConfig(1 + i % 4, 1 + i % 3), rng));
    const auto spec = assemble(cell, macro(4 + i % 30, {1 + i % 3, 1 + i % 2, 1 + i % 4}));
    for (std::size_t k = 1; k < spec.layers.size(); ++k) {
      const auto& a = spec.layers[k - 1];
      const auto& b = spec.layers[k];
      CHECK(a.out_channels == b.in_channels);
      CHECK(a.out_height == b.in_height);
      CHECK(a.out_width == b.in_width);
    }
    std::uint64_t sum = 0;
    for (const auto& l : spec.layers) sum += l.param_count;
    CHECK(sum == count_params(spec));
  }
}

TEST_CASE("count_params matches the closed-form oracle on random pairs") {
  Rng rng(4242);
  std::uniform_int_distribution<int> small(1, 4);
  std::uniform_int_distribution<int> width(1, 64);
  std::uniform_int_distribution<int> side(4, 64);
  std::uniform_int_distribution<int> classes(1, 200);
  for (int i = 0; i < 100; ++i) {
    const auto cell = develop(random_chromosome(GenomeConfig(small(rng), small(rng)), rng));
    MacroConfig m;
    m.stem_channels = width(rng);
    m.blocks = {small(rng), small(rng), small(rng)};
    m.num_classes = classes(rng);
    m.input = {side(rng), side(rng), small(rng)};
    CHECK(count_params(assemble(cell, m)) == oracle::param_count(cell, m));
  }
}

TEST_CASE("params grow strictly with stem width") {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const auto cell = develop(random_chromosome(GenomeConfig(3, 2), rng));
    std::uint64_t prev = 0;
    for (int c = 1; c <= 48; ++c) {
      const auto p = count_params(assemble(cell, macro(c, {1, 2, 1})));
      CHECK(p > prev);
      prev = p;
    }
  }
}

TEST_CASE("cell params do not depend on spatial size") {
  const auto cell = fig2();
  CHECK(cell_param_count(cell, 40) == 52 * 1600 + 16 * 40);
  MacroConfig a = macro(40, {1, 1, 1});
  MacroConfig b = a;
  b.input = {64, 48, 3};
  const auto ca = of_kind(assemble(cell, a), LayerKind::CellInstance);
  const auto cb = of_kind(assemble(cell, b), LayerKind::CellInstance);
  for (std::size_t i = 0; i < ca.size(); ++i) CHECK(ca[i]->param_count == cb[i]->param_count);
}

TEST_CASE("pooling uses floor division and rejects tiny inputs") {
  MacroConfig m = macro(8, {1, 1, 1});
  m.input = {7, 5, 1};
  const auto spec = assemble(single_conv(), m);
  const auto pools = of_kind(spec, LayerKind::MaxPool);
  CHECK(pools[0]->out_height == 3);
  CHECK(pools[0]->out_width == 2);
  CHECK(pools[1]->out_height == 1);
  CHECK(pools[1]->out_width == 1);

  m.input = {3, 3, 1};
  try {
    assemble(single_conv(), m);
    FAIL("tiny input accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Assembly);
    CHECK(std::string(e.what()).find("maxpool after block 2") != std::string::npos);
  }
}

TEST_CASE("invalid macro configs are rejected") {
  CHECK_THROWS_AS(assemble(single_conv(), macro(0, {1, 1, 1})), Error);
  CHECK_THROWS_AS(assemble(single_conv(), macro(16, {1, 0, 1})), Error);
  MacroConfig m;
  m.num_classes = 0;
  CHECK_THROWS_AS(validate(m), Error);
}

TEST_CASE("budget check") {
  const auto spec = assemble(fig2(), macro(40, {3, 3, 1}));
  const auto total = count_params(spec);
  CHECK(check_constraint(spec, total).ok());
  const auto tight = check_constraint(spec, total - 100'000);
  CHECK_FALSE(tight.ok());
  CHECK(tight.exceeded_by == 100'000);
  const auto zero = check_constraint(spec, 0);
  CHECK_FALSE(zero.ok());
  CHECK(zero.exceeded_by == total);
}

TEST_CASE("network JSON") {
  const auto spec = assemble(fig2(), macro(16, {1, 1, 1}));
  const auto j = nlohmann::json::parse(to_json(spec));
  CHECK(j["total_params"] == count_params(spec));
  REQUIRE(j["layers"].size() == spec.layers.size());
  std::uint64_t sum = 0;
  for (const auto& l : j["layers"]) sum += l["params"].get<std::uint64_t>();
  CHECK(sum == count_params(spec));
  CHECK(j["layers"][0]["kind"] == "stem");
  CHECK(j["layers"].back()["kind"] == "classifier");
  CHECK(j["cell"]["nodes"].size() == 10);
  CHECK(j["stem_channels"] == 16);
  CHECK(to_json(spec) == to_json(assemble(fig2(), macro(16, {1, 1, 1}))));
  CHECK(to_table(spec).find(std::to_string(count_params(spec))) != std::string::npos);
}
