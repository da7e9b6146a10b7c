// slge - command-line front end over the slge C library.
//
//   slge search        evolve a cell and write run artifacts
//   slge map           develop a chromosome into a cell (JSON or DOT)
//   slge assemble      stack a chromosome's cell into a network, count params
//   slge enumerate     search-space size, optionally exhaustive cell count
//   slge random-search evaluate random chromosomes without evolution
//   slge report        history.jsonl -> CSV
//
// Exit codes: 0 ok, 1 usage, 2 runtime, 3 evaluator protocol.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slge/slge.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitProtocol = 3;

/// Thrown by `check` with the exit code mapped from the library status.
struct CliFailure {
  int exit_code;
  std::string message;
};

int exit_code_for(slge_status status) {
  switch (status) {
    case SLGE_ERR_INVALID_ARGUMENT:
    case SLGE_ERR_PARSE:
      return kExitUsage;
    case SLGE_ERR_EVALUATION:
    case SLGE_ERR_PROTOCOL:
    case SLGE_ERR_TIMEOUT:
      return kExitProtocol;
    default:
      return kExitRuntime;
  }
}

void check(slge_status status, const std::string& context) {
  if (status == SLGE_OK) return;
  throw CliFailure{exit_code_for(status),
                   context + ": " + slge_status_name(status) + ": " + slge_last_error()};
}

struct StringDeleter {
  void operator()(char* s) const { slge_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

template <typename T, void (*Free)(T*)>
struct HandleDeleter {
  void operator()(T* p) const { Free(p); }
};
using ChromosomePtr = std::unique_ptr<slge_chromosome, HandleDeleter<slge_chromosome, slge_chromosome_free>>;
using CellPtr = std::unique_ptr<slge_cell, HandleDeleter<slge_cell, slge_cell_free>>;
using NetworkPtr = std::unique_ptr<slge_network, HandleDeleter<slge_network, slge_network_free>>;
using EvaluatorPtr = std::unique_ptr<slge_evaluator, HandleDeleter<slge_evaluator, slge_evaluator_free>>;
using RunPtr = std::unique_ptr<slge_run, HandleDeleter<slge_run, slge_run_free>>;

template <typename Fn>
std::string take_string(Fn&& produce, const std::string& context) {
  char* raw = nullptr;
  check(produce(&raw), context);
  OwnedString owned(raw);
  return std::string(owned.get());
}

ChromosomePtr decode(const std::string& text) {
  slge_chromosome* raw = nullptr;
  size_t offset = 0;
  const slge_status status = slge_chromosome_decode(text.c_str(), &raw, &offset);
  if (status != SLGE_OK) {
    throw CliFailure{kExitUsage, "cannot decode chromosome at position " + std::to_string(offset) +
                                     " (" + slge_last_error() + ")"};
  }
  return ChromosomePtr(raw);
}

std::string encode(const slge_chromosome* c) {
  return take_string([&](char** out) { return slge_chromosome_encode(c, out); }, "encode");
}

CellPtr develop(const slge_chromosome* c) {
  slge_cell* raw = nullptr;
  check(slge_develop(c, &raw), "develop");
  return CellPtr(raw);
}

NetworkPtr assemble(const slge_cell* cell, const slge_macro_config& macro) {
  slge_network* raw = nullptr;
  check(slge_assemble(cell, &macro, &raw), "assemble");
  return NetworkPtr(raw);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  check(slge_write_file_atomic(path.c_str(), content.c_str()), "write " + path.string());
}

std::vector<uint32_t> parse_uint_list(const std::string& text, std::size_t arity,
                                      const std::string& what) {
  std::vector<uint32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long value = std::stol(item, &used);
      if (used != item.size() || value <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<uint32_t>(value));
    } catch (const std::exception&) {
      throw CliFailure{kExitUsage, what + ": '" + item + "' is not a positive integer"};
    }
  }
  if (out.size() != arity) {
    throw CliFailure{kExitUsage, what + " needs exactly " + std::to_string(arity) +
                                     " comma-separated values, got '" + text + "'"};
  }
  return out;
}

struct MacroFlags {
  uint32_t stem_channels;
  std::string blocks;
  uint32_t classes = 10;
  std::string input_shape = "32,32,3";
  uint64_t budget = 3'500'000;

  slge_macro_config build() const {
    slge_macro_config m;
    slge_macro_config_default(&m);
    m.stem_channels = stem_channels;
    const auto b = parse_uint_list(blocks, 3, "blocks");
    for (std::size_t i = 0; i < 3; ++i) m.blocks[i] = b[i];
    m.num_classes = classes;
    const auto shape = parse_uint_list(input_shape, 3, "input shape");
    m.input_height = shape[0];
    m.input_width = shape[1];
    m.input_channels = shape[2];
    m.param_budget = budget;
    return m;
  }
};

struct RunFlags {
  uint32_t head_length = 3;
  uint32_t genes = 2;
  uint64_t seed = 0;
  std::string out_dir;
  std::string evaluator = "synthetic";
  std::string external_cmd;
  uint32_t workers = 1;
  uint32_t epochs = 25;
  uint32_t timeout_ms = 0;
  std::string target;
  std::string cache;
  slge_evolution_params evo{};
  MacroFlags search_macro{16, "1,1,1"};
  MacroFlags final_macro{40, "3,3,1"};
};

void add_genome_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--head-length", f.head_length, "Gene head length h")->check(CLI::PositiveNumber);
  cmd->add_option("--genes", f.genes, "Genes per chromosome n")->check(CLI::PositiveNumber);
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  add_genome_flags(cmd, f);
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--out", f.out_dir, "Output directory");
  cmd->add_option("--evaluator", f.evaluator, "Fitness evaluator")
      ->check(CLI::IsMember({"synthetic", "proxy", "external"}));
  cmd->add_option("--external-cmd", f.external_cmd, "Command line of the external evaluator");
  cmd->add_option("--workers", f.workers, "Concurrent fitness evaluations")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", f.epochs, "Training epochs per external evaluation")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--timeout-ms", f.timeout_ms, "External evaluation timeout (0 = default)");
  cmd->add_option("--target", f.target, "Target chromosome for the synthetic evaluator");
  cmd->add_option("--cache", f.cache, "Fitness cache file (loaded if present, saved after)");
  cmd->add_option("--stem-channels", f.search_macro.stem_channels, "Search-time stem channels C");
  cmd->add_option("--blocks", f.search_macro.blocks, "Search-time blocks b1,b2,b3");
  cmd->add_option("--classes", f.search_macro.classes, "Number of classes");
  cmd->add_option("--input-shape", f.search_macro.input_shape, "Input height,width,channels");
  cmd->add_option("--budget", f.final_macro.budget, "Parameter budget for the final network");
  cmd->add_option("--final-stem-channels", f.final_macro.stem_channels,
                  "Stem channels C of the final network");
  cmd->add_option("--final-blocks", f.final_macro.blocks, "Blocks of the final network");
}

void add_evolution_flags(CLI::App* cmd, slge_evolution_params& p) {
  cmd->add_option("--population", p.population_size, "Population size")->check(CLI::PositiveNumber);
  cmd->add_option("--generations", p.generations, "Generations")->check(CLI::PositiveNumber);
  cmd->add_option("--elites", p.elites, "Elites per generation");
  cmd->add_option("--mutation-rate", p.mutation_rate, "Per-element mutation rate");
  cmd->add_option("--inversion-rate", p.inversion_rate, "Per-chromosome inversion rate");
  cmd->add_option("--transposition-rate", p.transposition_rate, "Per-chromosome transposition rate");
  cmd->add_option("--seq-length", p.seq_length, "Inversion/transposition segment length");
  cmd->add_option("--two-point-rate", p.two_point_rate, "Two-point recombination rate per pair");
  cmd->add_option("--gene-rate", p.gene_rate, "Gene recombination rate per pair");
}

void warn_to_stderr(const char* message, void*) { std::cerr << "warning: " << message << '\n'; }

ChromosomePtr synthetic_target(const RunFlags& f) {
  if (!f.target.empty()) return decode(f.target);
  slge_chromosome* raw = nullptr;
  check(slge_chromosome_random(f.head_length, f.genes, f.seed ^ 0x9E3779B97F4A7C15ULL, &raw),
        "target");
  return ChromosomePtr(raw);
}

EvaluatorPtr make_evaluator(const RunFlags& f) {
  slge_evaluator* raw = nullptr;
  if (f.evaluator == "synthetic") {
    const auto target = synthetic_target(f);
    if (slge_chromosome_head_length(target.get()) != f.head_length ||
        slge_chromosome_gene_count(target.get()) != f.genes) {
      throw CliFailure{kExitUsage, "target chromosome shape does not match --head-length/--genes"};
    }
    std::cerr << "synthetic target: " << encode(target.get()) << '\n';
    check(slge_evaluator_synthetic_target(target.get(), &raw), "evaluator");
  } else if (f.evaluator == "proxy") {
    check(slge_evaluator_graph_proxy(&raw), "evaluator");
  } else {
    if (f.external_cmd.empty()) {
      throw CliFailure{kExitUsage, "--evaluator external requires --external-cmd"};
    }
    slge_external_options opts{};
    opts.command = f.external_cmd.c_str();
    opts.macro = f.search_macro.build();
    opts.epochs = f.epochs;
    opts.workers = f.workers;
    opts.timeout_ms = f.timeout_ms;
    opts.on_warning = warn_to_stderr;
    check(slge_evaluator_external(&opts, &raw), "evaluator");
  }
  slge_evaluator* memo = nullptr;
  check(slge_evaluator_memoize(raw, &memo), "evaluator");
  EvaluatorPtr evaluator(memo);
  if (!f.cache.empty() && std::filesystem::exists(f.cache)) {
    check(slge_evaluator_cache_load(evaluator.get(), f.cache.c_str()), "load cache");
  }
  return evaluator;
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
  const std::filesystem::path path = dir.empty() ? std::filesystem::path("slge-run") : std::filesystem::path(dir);
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw CliFailure{kExitRuntime, "cannot create " + path.string() + ": " + ec.message()};
  return path;
}

std::string budget_verdict(const slge_network* network, uint64_t budget) {
  int ok = 0;
  uint64_t exceeded = 0;
  check(slge_network_check_budget(network, budget, &ok, &exceeded), "budget check");
  const uint64_t total = slge_network_total_params(network);
  std::ostringstream os;
  if (ok) {
    os << "budget: ok (" << total << " <= " << budget << ")";
  } else {
    os << "budget: exceeded by " << exceeded << " (" << total << " > " << budget << ")";
  }
  return os.str();
}

int cmd_search(RunFlags& f) {
  // The final network shares the dataset-facing fields with the search network.
  f.final_macro.classes = f.search_macro.classes;
  f.final_macro.input_shape = f.search_macro.input_shape;
  f.search_macro.build();  // rejects malformed flags before any evaluation
  const slge_macro_config final_macro = f.final_macro.build();
  auto evaluator = make_evaluator(f);

  f.evo.rng_seed = f.seed;
  slge_run* raw_run = nullptr;
  check(slge_evolve(f.head_length, f.genes, &f.evo, evaluator.get(), f.workers, &raw_run),
        "search");
  RunPtr run(raw_run);
  const auto out = prepare_out_dir(f.out_dir);

  slge_chromosome* raw_best = nullptr;
  double best_fitness = 0.0;
  check(slge_run_best(run.get(), &raw_best, &best_fitness), "best");
  ChromosomePtr best(raw_best);
  const std::string best_text = encode(best.get());
  const auto cell = develop(best.get());
  const auto network = assemble(cell.get(), final_macro);

  const std::string history =
      take_string([&](char** o) { return slge_run_history_jsonl(run.get(), o); }, "history");
  const std::string csv =
      take_string([&](char** o) { return slge_history_to_csv(history.c_str(), o); }, "report");
  const std::string table =
      take_string([&](char** o) { return slge_network_to_table(network.get(), o); }, "table");
  const std::string verdict = budget_verdict(network.get(), final_macro.param_budget);

  write_atomic(out / "history.jsonl", history);
  write_atomic(out / "best.chromosome", best_text + "\n");
  write_atomic(out / "best.cell.json",
               take_string([&](char** o) { return slge_cell_to_json(cell.get(), o); }, "cell") + "\n");
  write_atomic(out / "best.dot",
               take_string([&](char** o) { return slge_cell_to_dot(cell.get(), o); }, "dot"));
  write_atomic(out / "report.csv", csv);
  write_atomic(out / "network.json",
               take_string([&](char** o) { return slge_network_to_json(network.get(), o); },
                           "network") + "\n");
  write_atomic(out / "network.txt", table + verdict + "\n");
  if (!f.cache.empty()) {
    check(slge_evaluator_cache_save(evaluator.get(), f.cache.c_str()), "save cache");
  }

  std::cout << "best fitness: " << best_fitness << '\n'
            << "best chromosome: " << best_text << '\n'
            << "evaluations: " << slge_evaluator_inner_calls(evaluator.get()) << '\n'
            << "final network params: " << slge_network_total_params(network.get()) << '\n'
            << verdict << '\n'
            << "artifacts: " << out.string() << '\n';
  return 0;
}

int cmd_map(const std::string& text, bool dot) {
  const auto chromosome = decode(text);
  const auto cell = develop(chromosome.get());
  if (dot) {
    std::cout << take_string([&](char** o) { return slge_cell_to_dot(cell.get(), o); }, "dot");
  } else {
    std::cout << take_string([&](char** o) { return slge_cell_to_json(cell.get(), o); }, "cell")
              << '\n';
  }
  return 0;
}

int cmd_assemble(const std::string& text, const MacroFlags& flags, bool json) {
  const slge_macro_config macro = flags.build();
  const auto chromosome = decode(text);
  const auto cell = develop(chromosome.get());
  const auto network = assemble(cell.get(), macro);
  if (json) {
    std::cout << take_string([&](char** o) { return slge_network_to_json(network.get(), o); },
                             "network")
              << '\n';
  } else {
    std::cout << take_string([&](char** o) { return slge_network_to_table(network.get(), o); },
                             "table")
              << budget_verdict(network.get(), macro.param_budget) << '\n';
  }
  return 0;
}

int cmd_enumerate(uint32_t h, uint32_t n, bool exhaustive) {
  uint64_t size = 0;
  check(slge_search_space_size(h, n, 4, 4, &size), "search space size");
  std::cout << "search space size: " << size << '\n';
  if (exhaustive) {
    uint64_t genotypes = 0;
    uint64_t distinct = 0;
    check(slge_enumerate_cells(h, n, &genotypes, &distinct), "exhaustive enumeration");
    std::cout << "genotypes enumerated: " << genotypes << '\n'
              << "distinct cells: " << distinct << '\n';
  }
  return 0;
}

int cmd_random_search(RunFlags& f, uint32_t count) {
  auto evaluator = make_evaluator(f);
  slge_random_report report{};
  slge_chromosome* raw_best = nullptr;
  check(slge_random_search(f.head_length, f.genes, count, f.seed, evaluator.get(), &report,
                           &raw_best),
        "random search");
  ChromosomePtr best(raw_best);
  std::ostringstream os;
  os << "individuals: " << report.count << '\n'
     << "best fitness: " << report.best << '\n'
     << "mean fitness: " << report.mean << '\n'
     << "stddev fitness: " << report.stddev << '\n'
     << "best chromosome: " << encode(best.get()) << '\n';
  std::cout << os.str();
  if (!f.out_dir.empty()) write_atomic(prepare_out_dir(f.out_dir) / "random_search.txt", os.str());
  return 0;
}

int cmd_report(const std::string& path, const std::string& out_dir) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{kExitRuntime, "cannot open " + path};
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string csv =
      take_string([&](char** o) { return slge_history_to_csv(buffer.str().c_str(), o); },
                  "report " + path);
  std::cout << csv;
  if (!out_dir.empty()) write_atomic(prepare_out_dir(out_dir) / "report.csv", csv);
  return 0;
}

/// Reads a flat `key = value` document. Keys are option names without the
/// leading dashes; '_' and '-' are interchangeable. '#' starts a comment.
std::vector<std::string> config_arguments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliFailure{kExitUsage, "cannot open config " + path};
  std::vector<std::string> args;
  std::string line;
  int line_no = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CliFailure{kExitUsage, path + ":" + std::to_string(line_no) + ": expected key = value"};
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

/// Splices config-file arguments in right after the subcommand so that
/// explicit flags, which come later, take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config_path.empty() || args.size() < 2) return args;
  const auto extra = config_arguments(config_path);
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary cell search with symbolic linear generative encoding", "slge"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Flat key = value config file (placed before flags)");

  RunFlags search_flags;
  slge_evolution_params_default(&search_flags.evo);
  auto* search = app.add_subcommand("search", "Run the evolutionary search");
  add_run_flags(search, search_flags);
  add_evolution_flags(search, search_flags.evo);
  search->add_option("--config", config_path, "Flat key = value config file");

  std::string map_text;
  bool map_dot = false;
  auto* map = app.add_subcommand("map", "Develop a chromosome into a cell");
  map->add_option("chromosome", map_text, "Canonical chromosome text")->required();
  map->add_flag("--dot", map_dot, "Emit Graphviz DOT instead of JSON");

  std::string assemble_text;
  bool assemble_json = false;
  MacroFlags assemble_macro{40, "3,3,1"};
  auto* assemble_cmd = app.add_subcommand("assemble", "Build the network for a chromosome");
  assemble_cmd->add_option("chromosome", assemble_text, "Canonical chromosome text")->required();
  assemble_cmd->add_option("--stem-channels", assemble_macro.stem_channels, "Stem channels C");
  assemble_cmd->add_option("--blocks", assemble_macro.blocks, "Cells per block b1,b2,b3");
  assemble_cmd->add_option("--classes", assemble_macro.classes, "Number of classes");
  assemble_cmd->add_option("--input-shape", assemble_macro.input_shape, "Input height,width,channels");
  assemble_cmd->add_option("--budget", assemble_macro.budget, "Parameter budget");
  assemble_cmd->add_flag("--json", assemble_json, "Emit network JSON instead of a table");

  uint32_t enum_h = 2;
  uint32_t enum_n = 3;
  bool exhaustive = false;
  auto* enumerate = app.add_subcommand("enumerate", "Search-space size and exhaustive cell count");
  enumerate->add_option("--head-length", enum_h, "Gene head length h")->check(CLI::PositiveNumber);
  enumerate->add_option("--genes", enum_n, "Genes per chromosome n")->check(CLI::PositiveNumber);
  enumerate->add_flag("--exhaustive", exhaustive, "Develop every genotype and count distinct cells");

  RunFlags random_flags;
  slge_evolution_params_default(&random_flags.evo);
  uint32_t random_count = 10;
  auto* random = app.add_subcommand("random-search", "Evaluate random chromosomes, no evolution");
  add_run_flags(random, random_flags);
  random->add_option("--population", random_count, "Number of random individuals")
      ->check(CLI::PositiveNumber);
  random->add_option("--config", config_path, "Flat key = value config file");

  std::string history_path;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Convert history.jsonl to CSV");
  report->add_option("history", history_path, "Path to history.jsonl")->required();
  report->add_option("--out", report_out, "Also write report.csv into this directory");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::vector<char*> raw;
    for (auto& a : args) raw.push_back(a.data());
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const CliFailure& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.exit_code;
  }

  try {
    if (*search) return cmd_search(search_flags);
    if (*map) return cmd_map(map_text, map_dot);
    if (*assemble_cmd) return cmd_assemble(assemble_text, assemble_macro, assemble_json);
    if (*enumerate) return cmd_enumerate(enum_h, enum_n, exhaustive);
    if (*random) return cmd_random_search(random_flags, random_count);
    if (*report) return cmd_report(history_path, report_out);
  } catch (const CliFailure& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.exit_code;
  }
  return kExitUsage;
}
