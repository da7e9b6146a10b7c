#include "slge/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"
#include "slge/error.hpp"
#include "slge/io.hpp"

namespace slge {

FitnessValue::FitnessValue(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::Protocol,
                "fitness " + std::to_string(value) + " is outside [0, 1]");
  }
}

FitnessValue eval_synthetic_target(const Chromosome& chromosome, const Chromosome& target) {
  if (!(chromosome.config == target.config)) {
    throw Error(ErrorCode::InvalidArgument, "chromosome and target configs differ");
  }
  const auto a = chromosome.flatten();
  const auto b = target.flatten();
  if (a.size() != b.size()) {
    throw Error(ErrorCode::InvalidArgument, "chromosome and target lengths differ");
  }
  std::size_t distance = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] == b[i])) ++distance;
  }
  return FitnessValue(1.0 - static_cast<double>(distance) / static_cast<double>(a.size()));
}

int longest_path_length(const CellGraph& cell) {
  const auto order = cell.topological_order();
  if (order.empty()) throw Error(ErrorCode::InvalidArgument, "cell has a cycle");
  // -1 marks nodes not reachable from Input.
  std::vector<int> depth(cell.nodes().size(), -1);
  depth[CellGraph::input()] = 0;
  for (NodeId id : order) {
    if (depth[id] < 0) continue;
    for (NodeId next : cell.successors(id)) depth[next] = std::max(depth[next], depth[id] + 1);
  }
  return std::max(depth[CellGraph::output()], 0);
}

FitnessValue eval_graph_proxy(const CellGraph& cell) {
  std::set<ConvOp> kinds;
  for (const auto& node : cell.nodes()) {
    if (node.kind == NodeKind::Conv) kinds.insert(node.op);
  }
  const double diversity = static_cast<double>(kinds.size()) / 4.0;
  const double depth = static_cast<double>(std::min(longest_path_length(cell), 8)) / 8.0;
  return FitnessValue(0.5 * diversity + 0.5 * depth);
}

FitnessValue SyntheticTargetEvaluator::evaluate(const Chromosome& chromosome) {
  return eval_synthetic_target(chromosome, target_);
}

FitnessValue GraphProxyEvaluator::evaluate(const Chromosome& chromosome) {
  return eval_graph_proxy(develop(chromosome));
}

FitnessValue TolerantEvaluator::evaluate(const Chromosome& chromosome) {
  try {
    return inner_->evaluate(chromosome);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Evaluation && e.code() != ErrorCode::Timeout) throw;
    if (warn_) {
      warn_("evaluation of '" + encode_text(chromosome) + "' failed, fitness set to 0: " +
            e.what());
    }
    return FitnessValue(0.0);
  }
}

FitnessValue MemoizedEvaluator::evaluate(const Chromosome& chromosome) {
  const std::string key = encode_text(chromosome);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++hits_;
      return FitnessValue(it->second);
    }
  }
  ++inner_calls_;
  const FitnessValue value = inner_->evaluate(chromosome);
  std::lock_guard lock(mutex_);
  cache_[key] = value.value();
  return value;
}

std::size_t MemoizedEvaluator::size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

void MemoizedEvaluator::load(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  std::unordered_map<std::string, double> loaded;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto text = j.at("chromosome").get<std::string>();
      const double fitness = j.at("fitness").get<double>();
      decode_text(text);
      loaded[text] = FitnessValue(fitness).value();
    } catch (const std::exception& e) {
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::lock_guard lock(mutex_);
  for (auto& [k, v] : loaded) cache_[k] = v;
}

void MemoizedEvaluator::save(const std::string& path) const {
  std::vector<std::pair<std::string, double>> entries;
  {
    std::lock_guard lock(mutex_);
    entries.assign(cache_.begin(), cache_.end());
  }
  std::sort(entries.begin(), entries.end());
  std::string out;
  for (const auto& [text, fitness] : entries) {
    out += nlohmann::json{{"chromosome", text}, {"fitness", fitness}}.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::shared_ptr<MemoizedEvaluator> memoize(std::shared_ptr<Evaluator> inner) {
  return std::make_shared<MemoizedEvaluator>(std::move(inner));
}

std::string format_request(const EvalRequest& request) {
  nlohmann::json j;
  j["id"] = request.id;
  j["chromosome"] = request.chromosome;
  j["network"] = nlohmann::json::parse(request.network_json);
  j["budget"] = {{"epochs", request.epochs}};
  return j.dump();
}

EvalResponse parse_response(std::string_view line) {
  const auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorCode::Protocol, why + " in response line: " + std::string(line));
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw fail("unparseable JSON");
  }
  if (!j.is_object()) throw fail("expected a JSON object");
  if (!j.contains("id") || !j["id"].is_string()) throw fail("missing string id");

  EvalResponse out;
  out.id = j["id"].get<std::string>();
  const bool has_accuracy = j.contains("accuracy");
  const bool has_error = j.contains("error");
  if (has_accuracy == has_error) throw fail("exactly one of accuracy/error required");
  if (has_error) {
    if (!j["error"].is_string()) throw fail("error must be a string");
    out.error = j["error"].get<std::string>();
  } else {
    if (!j["accuracy"].is_number()) throw fail("accuracy must be a number");
    const double acc = j["accuracy"].get<double>();
    if (!(acc >= 0.0 && acc <= 1.0)) throw fail("accuracy outside [0, 1]");
    out.accuracy = acc;
  }
  if (j.contains("params")) {
    if (!j["params"].is_number_unsigned()) throw fail("params must be a non-negative integer");
    out.params = j["params"].get<std::uint64_t>();
  }
  return out;
}

}  // namespace slge
