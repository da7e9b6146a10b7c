#include "slge/assembler.hpp"

#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "slge/error.hpp"

namespace slge {

namespace {

std::uint64_t conv_bn_params(KernelShape kernel, std::uint64_t in, std::uint64_t out) {
  return static_cast<std::uint64_t>(kernel.area()) * in * out + 2 * out;
}

}  // namespace

void validate(const MacroConfig& macro) {
  const bool ok = macro.stem_channels > 0 && macro.num_classes > 0 &&
                  macro.input.height > 0 && macro.input.width > 0 &&
                  macro.input.channels > 0 && macro.blocks[0] > 0 &&
                  macro.blocks[1] > 0 && macro.blocks[2] > 0 && macro.param_budget > 0;
  if (!ok) throw Error(ErrorCode::InvalidArgument, "macro config values must be positive");
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Stem: return "stem";
    case LayerKind::CellInstance: return "cell-instance";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Projection: return "projection-1x1";
    case LayerKind::GlobalPool: return "global-pool";
    case LayerKind::Classifier: return "classifier";
  }
  return "";
}

int output_fan_in(const CellGraph& cell) {
  return static_cast<int>(cell.predecessors(CellGraph::output()).size());
}

std::uint64_t cell_param_count(const CellGraph& cell, int width) {
  std::uint64_t total = 0;
  for (const auto& node : cell.nodes()) {
    if (node.kind == NodeKind::Conv) {
      total += conv_bn_params(kernel_shape(node.op), width, width);
    }
  }
  return total;
}

std::uint64_t layer_param_count(const Layer& layer, const CellGraph& cell) {
  switch (layer.kind) {
    case LayerKind::Stem:
    case LayerKind::Projection:
      return conv_bn_params(layer.kernel, layer.in_channels, layer.out_channels);
    case LayerKind::CellInstance:
      return cell_param_count(cell, layer.node_width);
    case LayerKind::Classifier:
      return static_cast<std::uint64_t>(layer.in_channels) * layer.out_channels +
             layer.out_channels;
    case LayerKind::MaxPool:
    case LayerKind::GlobalPool:
      return 0;
  }
  return 0;
}

NetworkSpec assemble(const CellGraph& cell, const MacroConfig& macro) {
  validate(macro);
  if (const auto problems = cell.check_invariants(); !problems.empty()) {
    throw Error(ErrorCode::InvalidArgument, "invalid cell: " + problems.front());
  }
  if (cell.conv_count() == 0) {
    throw Error(ErrorCode::InvalidArgument, "cell has no conv nodes");
  }

  NetworkSpec spec{macro, cell, {}};
  const int fan_in = output_fan_in(cell);
  int channels = macro.input.channels;
  int height = macro.input.height;
  int width = macro.input.width;

  const auto push = [&](Layer layer) {
    layer.in_channels = layer.in_channels ? layer.in_channels : channels;
    layer.in_height = height;
    layer.in_width = width;
    if (layer.out_height == 0) {
      layer.out_height = height;
      layer.out_width = width;
    }
    layer.param_count = layer_param_count(layer, cell);
    channels = layer.out_channels;
    height = layer.out_height;
    width = layer.out_width;
    spec.layers.push_back(layer);
  };

  push({.kind = LayerKind::Stem, .out_channels = macro.stem_channels, .kernel = {3, 3}});

  int node_width = macro.stem_channels;
  for (int b = 0; b < 3; ++b) {
    if (b > 0) {
      if (height < 2 || width < 2) {
        std::ostringstream os;
        os << "maxpool after block " << b << ": input " << height << "x" << width
           << " is too small for 2x2 pooling with stride 2";
        throw Error(ErrorCode::Assembly, os.str());
      }
      push({.kind = LayerKind::MaxPool,
            .block = b - 1,
            .out_channels = channels,
            .out_height = height / 2,
            .out_width = width / 2,
            .kernel = {2, 2}});
      node_width *= 2;
    }
    for (int i = 0; i < macro.blocks[static_cast<std::size_t>(b)]; ++i) {
      if (channels != node_width) {
        push({.kind = LayerKind::Projection, .block = b, .out_channels = node_width,
              .kernel = {1, 1}});
      }
      push({.kind = LayerKind::CellInstance,
            .block = b,
            .out_channels = fan_in * node_width,
            .node_width = node_width});
    }
  }
  push({.kind = LayerKind::GlobalPool, .out_channels = channels, .out_height = 1, .out_width = 1});
  push({.kind = LayerKind::Classifier, .out_channels = macro.num_classes,
        .out_height = 1, .out_width = 1});
  return spec;
}

std::uint64_t count_params(const NetworkSpec& spec) {
  std::uint64_t total = 0;
  for (const auto& layer : spec.layers) total += layer_param_count(layer, spec.cell);
  return total;
}

ConstraintCheck check_constraint(const NetworkSpec& spec, std::uint64_t budget) {
  ConstraintCheck check;
  check.params = count_params(spec);
  check.budget = budget;
  check.exceeded_by = check.params > budget ? check.params - budget : 0;
  return check;
}

std::string to_json(const NetworkSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : spec.layers) {
    nlohmann::json j;
    j["kind"] = to_string(layer.kind);
    if (layer.block >= 0) j["block"] = layer.block;
    j["in_channels"] = layer.in_channels;
    j["out_channels"] = layer.out_channels;
    j["in_size"] = {layer.in_height, layer.in_width};
    j["out_size"] = {layer.out_height, layer.out_width};
    if (layer.kernel.area() > 0) j["kernel"] = {layer.kernel.height, layer.kernel.width};
    if (layer.kind == LayerKind::MaxPool) j["stride"] = 2;
    if (layer.kind == LayerKind::CellInstance) j["node_width"] = layer.node_width;
    j["params"] = layer.param_count;
    layers.push_back(std::move(j));
  }
  const auto& m = spec.macro;
  nlohmann::json out;
  out["input"] = {{"height", m.input.height}, {"width", m.input.width},
                  {"channels", m.input.channels}};
  out["stem_channels"] = m.stem_channels;
  out["blocks"] = m.blocks;
  out["num_classes"] = m.num_classes;
  out["cell"] = nlohmann::json::parse(to_json(spec.cell));
  out["layers"] = std::move(layers);
  out["total_params"] = count_params(spec);
  return out.dump();
}

std::string to_table(const NetworkSpec& spec) {
  std::ostringstream os;
  os << std::left << std::setw(4) << "#" << std::setw(16) << "layer" << std::setw(7)
     << "block" << std::setw(8) << "kernel" << std::setw(14) << "in" << std::setw(14)
     << "out" << std::right << std::setw(12) << "params" << '\n';
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const Layer& l = spec.layers[i];
    const auto shape = [](int c, int h, int w) {
      return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
    };
    const std::string kernel =
        l.kernel.area() > 0 ? std::to_string(l.kernel.height) + "x" + std::to_string(l.kernel.width)
                            : "-";
    os << std::left << std::setw(4) << i << std::setw(16) << to_string(l.kind) << std::setw(7)
       << (l.block >= 0 ? std::to_string(l.block + 1) : "-") << std::setw(8) << kernel
       << std::setw(14) << shape(l.in_channels, l.in_height, l.in_width) << std::setw(14)
       << shape(l.out_channels, l.out_height, l.out_width) << std::right << std::setw(12)
       << l.param_count << '\n';
  }
  os << "total params: " << count_params(spec) << '\n';
  return os.str();
}

}  // namespace slge
