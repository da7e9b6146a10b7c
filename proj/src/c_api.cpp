#include "slge/slge.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "slge/assembler.hpp"
#include "slge/error.hpp"
#include "slge/evolution.hpp"
#include "slge/fitness.hpp"
#include "slge/genome.hpp"
#include "slge/io.hpp"
#include "slge/mapper.hpp"

struct slge_chromosome {
  slge::Chromosome value;
};

struct slge_cell {
  slge::CellGraph value;
};

struct slge_network {
  slge::NetworkSpec value;
};

struct slge_evaluator {
  std::shared_ptr<slge::Evaluator> value;
  std::shared_ptr<slge::MemoizedEvaluator> memo;  // set when memoizing
};

struct slge_run {
  slge::EvolutionResult value;
};

namespace {

thread_local std::string last_error;

slge_status to_status(slge::ErrorCode code) {
  switch (code) {
    case slge::ErrorCode::InvalidArgument: return SLGE_ERR_INVALID_ARGUMENT;
    case slge::ErrorCode::Parse: return SLGE_ERR_PARSE;
    case slge::ErrorCode::Overflow: return SLGE_ERR_OVERFLOW;
    case slge::ErrorCode::Assembly: return SLGE_ERR_ASSEMBLY;
    case slge::ErrorCode::Evaluation: return SLGE_ERR_EVALUATION;
    case slge::ErrorCode::Protocol: return SLGE_ERR_PROTOCOL;
    case slge::ErrorCode::Timeout: return SLGE_ERR_TIMEOUT;
    case slge::ErrorCode::Io: return SLGE_ERR_IO;
  }
  return SLGE_ERR_INTERNAL;
}

slge::ErrorCode to_code(slge_status status) {
  switch (status) {
    case SLGE_ERR_INVALID_ARGUMENT: return slge::ErrorCode::InvalidArgument;
    case SLGE_ERR_PARSE: return slge::ErrorCode::Parse;
    case SLGE_ERR_OVERFLOW: return slge::ErrorCode::Overflow;
    case SLGE_ERR_ASSEMBLY: return slge::ErrorCode::Assembly;
    case SLGE_ERR_PROTOCOL: return slge::ErrorCode::Protocol;
    case SLGE_ERR_TIMEOUT: return slge::ErrorCode::Timeout;
    case SLGE_ERR_IO: return slge::ErrorCode::Io;
    default: return slge::ErrorCode::Evaluation;
  }
}

// Runs `body`, translating exceptions into a status and last_error.
template <typename F>
slge_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return SLGE_OK;
  } catch (const slge::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SLGE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SLGE_ERR_INTERNAL;
  }
}

void require(bool condition, const char* what) {
  if (!condition) throw slge::Error(slge::ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

slge::MacroConfig to_macro(const slge_macro_config& m) {
  slge::MacroConfig out;
  out.stem_channels = static_cast<int>(m.stem_channels);
  for (std::size_t i = 0; i < 3; ++i) out.blocks[i] = static_cast<int>(m.blocks[i]);
  out.num_classes = static_cast<int>(m.num_classes);
  out.input = {static_cast<int>(m.input_height), static_cast<int>(m.input_width),
               static_cast<int>(m.input_channels)};
  out.param_budget = m.param_budget;
  return out;
}

slge::GenomeConfig genome_config(uint32_t h, uint32_t n) {
  return slge::GenomeConfig(static_cast<int>(h), static_cast<int>(n));
}

}  // namespace

extern "C" {

const char* slge_last_error(void) { return last_error.c_str(); }

const char* slge_status_name(slge_status status) {
  switch (status) {
    case SLGE_OK: return "ok";
    case SLGE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SLGE_ERR_PARSE: return "parse error";
    case SLGE_ERR_OVERFLOW: return "overflow";
    case SLGE_ERR_ASSEMBLY: return "assembly error";
    case SLGE_ERR_EVALUATION: return "evaluation error";
    case SLGE_ERR_PROTOCOL: return "evaluator protocol error";
    case SLGE_ERR_TIMEOUT: return "evaluator timeout";
    case SLGE_ERR_IO: return "i/o error";
    case SLGE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void slge_string_free(char* s) { std::free(s); }

slge_status slge_search_space_size(uint64_t head_length, uint64_t gene_count,
                                   uint64_t num_symbols, uint64_t num_ops, uint64_t* out) {
  return guarded([&] {
    require(out, "out is null");
    *out = slge::search_space_size(head_length, gene_count, num_symbols, num_ops);
  });
}

slge_status slge_chromosome_random(uint32_t head_length, uint32_t gene_count, uint64_t seed,
                                   slge_chromosome** out) {
  return guarded([&] {
    require(out, "out is null");
    slge::Rng rng(seed);
    *out = new slge_chromosome{slge::random_chromosome(genome_config(head_length, gene_count), rng)};
  });
}

slge_status slge_chromosome_decode(const char* text, slge_chromosome** out,
                                   size_t* error_offset) {
  try {
    last_error.clear();
    require(text && out, "text or out is null");
    *out = new slge_chromosome{slge::decode_text(text)};
    return SLGE_OK;
  } catch (const slge::ParseError& e) {
    if (error_offset) *error_offset = e.offset();
    last_error = e.what();
    return SLGE_ERR_PARSE;
  } catch (const slge::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return SLGE_ERR_INTERNAL;
  }
}

slge_status slge_chromosome_encode(const slge_chromosome* chromosome, char** out) {
  return guarded([&] {
    require(chromosome && out, "null argument");
    *out = dup_string(slge::encode_text(chromosome->value));
  });
}

uint32_t slge_chromosome_head_length(const slge_chromosome* chromosome) {
  return chromosome ? static_cast<uint32_t>(chromosome->value.config.head_length()) : 0;
}

uint32_t slge_chromosome_gene_count(const slge_chromosome* chromosome) {
  return chromosome ? static_cast<uint32_t>(chromosome->value.config.gene_count()) : 0;
}

void slge_chromosome_free(slge_chromosome* chromosome) { delete chromosome; }

slge_status slge_develop(const slge_chromosome* chromosome, slge_cell** out) {
  return guarded([&] {
    require(chromosome && out, "null argument");
    *out = new slge_cell{slge::develop(chromosome->value)};
  });
}

size_t slge_cell_conv_count(const slge_cell* cell) { return cell ? cell->value.conv_count() : 0; }

size_t slge_cell_edge_count(const slge_cell* cell) {
  return cell ? cell->value.edges().size() : 0;
}

slge_status slge_cell_to_json(const slge_cell* cell, char** out) {
  return guarded([&] {
    require(cell && out, "null argument");
    *out = dup_string(slge::to_json(cell->value));
  });
}

slge_status slge_cell_to_dot(const slge_cell* cell, char** out) {
  return guarded([&] {
    require(cell && out, "null argument");
    *out = dup_string(slge::to_dot(cell->value));
  });
}

slge_status slge_cell_canonical_form(const slge_cell* cell, char** out) {
  return guarded([&] {
    require(cell && out, "null argument");
    *out = dup_string(slge::canonical_form(cell->value));
  });
}

void slge_cell_free(slge_cell* cell) { delete cell; }

slge_status slge_enumerate_cells(uint32_t head_length, uint32_t gene_count, uint64_t* genotypes,
                                 uint64_t* distinct_cells) {
  return guarded([&] {
    require(genotypes && distinct_cells, "null argument");
    const auto result = slge::enumerate_cells(genome_config(head_length, gene_count));
    *genotypes = result.genotypes;
    *distinct_cells = result.distinct_cells;
  });
}

void slge_macro_config_default(slge_macro_config* out) {
  if (!out) return;
  const slge::MacroConfig m;
  out->stem_channels = static_cast<uint32_t>(m.stem_channels);
  for (std::size_t i = 0; i < 3; ++i) out->blocks[i] = static_cast<uint32_t>(m.blocks[i]);
  out->num_classes = static_cast<uint32_t>(m.num_classes);
  out->input_height = static_cast<uint32_t>(m.input.height);
  out->input_width = static_cast<uint32_t>(m.input.width);
  out->input_channels = static_cast<uint32_t>(m.input.channels);
  out->param_budget = m.param_budget;
}

slge_status slge_assemble(const slge_cell* cell, const slge_macro_config* macro,
                          slge_network** out) {
  return guarded([&] {
    require(cell && macro && out, "null argument");
    *out = new slge_network{slge::assemble(cell->value, to_macro(*macro))};
  });
}

uint64_t slge_network_total_params(const slge_network* network) {
  return network ? slge::count_params(network->value) : 0;
}

slge_status slge_network_check_budget(const slge_network* network, uint64_t budget,
                                      int* within_budget, uint64_t* exceeded_by) {
  return guarded([&] {
    require(network && within_budget, "null argument");
    const auto check = slge::check_constraint(network->value, budget);
    *within_budget = check.ok() ? 1 : 0;
    if (exceeded_by) *exceeded_by = check.exceeded_by;
  });
}

slge_status slge_network_to_json(const slge_network* network, char** out) {
  return guarded([&] {
    require(network && out, "null argument");
    *out = dup_string(slge::to_json(network->value));
  });
}

slge_status slge_network_to_table(const slge_network* network, char** out) {
  return guarded([&] {
    require(network && out, "null argument");
    *out = dup_string(slge::to_table(network->value));
  });
}

void slge_network_free(slge_network* network) { delete network; }

slge_status slge_evaluator_synthetic_target(const slge_chromosome* target, slge_evaluator** out) {
  return guarded([&] {
    require(target && out, "null argument");
    *out = new slge_evaluator{std::make_shared<slge::SyntheticTargetEvaluator>(target->value), {}};
  });
}

slge_status slge_evaluator_graph_proxy(slge_evaluator** out) {
  return guarded([&] {
    require(out, "null argument");
    *out = new slge_evaluator{std::make_shared<slge::GraphProxyEvaluator>(), {}};
  });
}

slge_status slge_evaluator_callback(slge_fitness_fn fn, void* user_data, slge_evaluator** out) {
  return guarded([&] {
    require(fn && out, "null argument");
    auto callback = [fn, user_data](const slge::Chromosome& c) {
      const std::string text = slge::encode_text(c);
      double fitness = 0.0;
      const slge_status status = fn(text.c_str(), user_data, &fitness);
      if (status != SLGE_OK) {
        throw slge::Error(to_code(status), std::string("fitness callback returned ") +
                                               slge_status_name(status));
      }
      return fitness;
    };
    *out = new slge_evaluator{std::make_shared<slge::CallbackEvaluator>(callback), {}};
  });
}

slge_status slge_evaluator_external(const slge_external_options* options, slge_evaluator** out) {
  return guarded([&] {
    require(options && options->command && out, "null argument");
    slge::ExternalOptions opts;
    opts.command = options->command;
    opts.macro = to_macro(options->macro);
    opts.epochs = static_cast<int>(options->epochs);
    opts.workers = static_cast<int>(options->workers == 0 ? 1 : options->workers);
    if (options->timeout_ms > 0) opts.timeout = std::chrono::milliseconds(options->timeout_ms);
    std::shared_ptr<slge::Evaluator> evaluator =
        std::make_shared<slge::ExternalEvaluator>(std::move(opts));
    if (options->on_warning) {
      auto warn = options->on_warning;
      void* user = options->warning_user_data;
      evaluator = std::make_shared<slge::TolerantEvaluator>(
          evaluator, [warn, user](const std::string& message) { warn(message.c_str(), user); });
    }
    *out = new slge_evaluator{std::move(evaluator), {}};
  });
}

slge_status slge_evaluator_memoize(slge_evaluator* inner, slge_evaluator** out) {
  return guarded([&] {
    require(inner && out, "null argument");
    std::unique_ptr<slge_evaluator> owned(inner);
    auto memo = slge::memoize(owned->value);
    *out = new slge_evaluator{memo, memo};
  });
}

slge_status slge_evaluator_cache_load(slge_evaluator* evaluator, const char* path) {
  return guarded([&] {
    require(evaluator && path, "null argument");
    require(evaluator->memo != nullptr, "evaluator is not memoizing");
    evaluator->memo->load(path);
  });
}

slge_status slge_evaluator_cache_save(const slge_evaluator* evaluator, const char* path) {
  return guarded([&] {
    require(evaluator && path, "null argument");
    require(evaluator->memo != nullptr, "evaluator is not memoizing");
    evaluator->memo->save(path);
  });
}

uint64_t slge_evaluator_inner_calls(const slge_evaluator* evaluator) {
  return evaluator && evaluator->memo ? evaluator->memo->inner_calls() : 0;
}

slge_status slge_evaluate(slge_evaluator* evaluator, const slge_chromosome* chromosome,
                          double* fitness) {
  return guarded([&] {
    require(evaluator && chromosome && fitness, "null argument");
    *fitness = evaluator->value->evaluate(chromosome->value).value();
  });
}

void slge_evaluator_free(slge_evaluator* evaluator) { delete evaluator; }

void slge_evolution_params_default(slge_evolution_params* out) {
  if (!out) return;
  const slge::EvolutionParams p;
  out->population_size = static_cast<uint32_t>(p.population_size);
  out->generations = static_cast<uint32_t>(p.generations);
  out->elites = static_cast<uint32_t>(p.elites);
  out->mutation_rate = p.mutation_rate;
  out->inversion_rate = p.inversion_rate;
  out->transposition_rate = p.transposition_rate;
  out->seq_length = static_cast<uint32_t>(p.seq_length);
  out->two_point_rate = p.two_point_rate;
  out->gene_rate = p.gene_rate;
  out->rng_seed = p.rng_seed;
}

slge_status slge_evolve(uint32_t head_length, uint32_t gene_count,
                        const slge_evolution_params* params, slge_evaluator* evaluator,
                        uint32_t workers, slge_run** out) {
  return guarded([&] {
    require(params && evaluator && out, "null argument");
    slge::EvolutionParams p;
    p.population_size = static_cast<int>(params->population_size);
    p.generations = static_cast<int>(params->generations);
    p.elites = static_cast<int>(params->elites);
    p.mutation_rate = params->mutation_rate;
    p.inversion_rate = params->inversion_rate;
    p.transposition_rate = params->transposition_rate;
    p.seq_length = static_cast<int>(params->seq_length);
    p.two_point_rate = params->two_point_rate;
    p.gene_rate = params->gene_rate;
    p.rng_seed = params->rng_seed;
    slge::EvolveOptions options;
    options.workers = static_cast<int>(workers == 0 ? 1 : workers);
    *out = new slge_run{
        slge::evolve(genome_config(head_length, gene_count), p, *evaluator->value, options)};
  });
}

slge_status slge_run_best(const slge_run* run, slge_chromosome** chromosome, double* fitness) {
  return guarded([&] {
    require(run && chromosome && fitness, "null argument");
    *chromosome = new slge_chromosome{run->value.best.chromosome};
    *fitness = run->value.best.fitness.value_or(0.0);
  });
}

size_t slge_run_generation_count(const slge_run* run) {
  return run ? run->value.history.generations.size() : 0;
}

slge_status slge_run_history_jsonl(const slge_run* run, char** out) {
  return guarded([&] {
    require(run && out, "null argument");
    *out = dup_string(slge::history_to_jsonl(run->value.history));
  });
}

void slge_run_free(slge_run* run) { delete run; }

slge_status slge_random_search(uint32_t head_length, uint32_t gene_count, uint32_t count,
                               uint64_t seed, slge_evaluator* evaluator,
                               slge_random_report* report, slge_chromosome** best) {
  return guarded([&] {
    require(evaluator && report, "null argument");
    const auto result = slge::random_search(genome_config(head_length, gene_count),
                                            static_cast<int>(count), seed, *evaluator->value);
    report->best = result.best.fitness.value_or(0.0);
    report->mean = result.mean;
    report->stddev = result.stddev;
    report->count = count;
    if (best) *best = new slge_chromosome{result.best.chromosome};
  });
}

slge_status slge_history_to_csv(const char* jsonl, char** out) {
  return guarded([&] {
    require(jsonl && out, "null argument");
    *out = dup_string(slge::history_to_csv(slge::history_from_jsonl(jsonl)));
  });
}

slge_status slge_write_file_atomic(const char* path, const char* content) {
  return guarded([&] {
    require(path && content, "null argument");
    slge::write_file_atomic(path, content);
  });
}

}  // extern "C"
