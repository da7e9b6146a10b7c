#pragma once

// Macroarchitecture assembly and parameter counting. A cell is stacked into
// stem -> block 1 -> maxpool -> block 2 -> maxpool -> block 3 -> global pool
// -> classifier. Every conv node inside a cell has the block's width W; the
// cell output concatenates the Output node's predecessors (k * W channels).

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "slge/mapper.hpp"

namespace slge {

struct InputShape {
  int height = 32;
  int width = 32;
  int channels = 3;

  bool operator==(const InputShape&) const = default;
};

struct MacroConfig {
  int stem_channels = 16;
  std::array<int, 3> blocks{1, 1, 1};
  int num_classes = 10;
  InputShape input{};
  std::uint64_t param_budget = 3'500'000;

  bool operator==(const MacroConfig&) const = default;
};

/// Throws Error(InvalidArgument) if any field is non-positive.
void validate(const MacroConfig& macro);

enum class LayerKind { Stem, CellInstance, MaxPool, Projection, GlobalPool, Classifier };

std::string_view to_string(LayerKind kind);

struct Layer {
  LayerKind kind;
  int block = -1;  // 0-based block index, -1 outside blocks
  int in_channels = 0;
  int out_channels = 0;
  int in_height = 0;
  int in_width = 0;
  int out_height = 0;
  int out_width = 0;
  KernelShape kernel{0, 0};  // stem, projection and maxpool
  int node_width = 0;        // cell instances only
  std::uint64_t param_count = 0;
};

struct NetworkSpec {
  MacroConfig macro;
  CellGraph cell;
  std::vector<Layer> layers;
};

/// Number of conv nodes feeding the cell Output (the concatenation factor).
int output_fan_in(const CellGraph& cell);

/// Conv parameters of one cell instance at node width `width`.
std::uint64_t cell_param_count(const CellGraph& cell, int width);

/// Throws Error(InvalidArgument) for an invalid cell or macro and
/// Error(Assembly) when the input is too small for the pooling schedule.
NetworkSpec assemble(const CellGraph& cell, const MacroConfig& macro);

/// Parameters of one layer under the counting convention: convolutions have
/// no bias and are followed by batch-norm (2 scalars per output channel);
/// the classifier is a dense layer with bias; pooling layers are free.
std::uint64_t layer_param_count(const Layer& layer, const CellGraph& cell);

std::uint64_t count_params(const NetworkSpec& spec);

struct ConstraintCheck {
  std::uint64_t params = 0;
  std::uint64_t budget = 0;
  std::uint64_t exceeded_by = 0;

  bool ok() const { return params <= budget; }
};

ConstraintCheck check_constraint(const NetworkSpec& spec, std::uint64_t budget);

/// Layer array with shapes and counts, the macro config, the canonical cell
/// and the total. This is the document sent to external evaluators.
std::string to_json(const NetworkSpec& spec);

/// Human-readable layer table followed by the total.
std::string to_table(const NetworkSpec& spec);

}  // namespace slge
