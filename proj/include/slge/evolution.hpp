#pragma once

// Gene-expression-programming loop over linear chromosomes. Each generation:
// evaluate, roulette selection with elitism, then mutation, inversion,
// transposition and recombination applied to the non-elite offspring.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slge/fitness.hpp"
#include "slge/genome.hpp"

namespace slge {

struct EvolutionParams {
  int population_size = 20;
  int generations = 20;
  int elites = 1;
  double mutation_rate = 0.044;      // per element
  double inversion_rate = 0.1;       // per chromosome
  double transposition_rate = 0.1;   // per chromosome
  int seq_length = 2;                // inversion/transposition segment
  double two_point_rate = 0.6;       // per pair
  double gene_rate = 0.1;            // per pair
  std::uint64_t rng_seed = 0;
};

/// Throws Error(InvalidArgument) on rates outside [0, 1], elites >=
/// population size, or non-positive sizes.
void validate(const EvolutionParams& params);

struct Individual {
  Chromosome chromosome;
  std::optional<double> fitness;
};

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  std::string best_chromosome;
  std::uint64_t evaluations = 0;  // evaluator calls made this generation
  std::uint64_t cache_hits = 0;   // genotypes already scored earlier in the run

  bool operator==(const GenerationRecord&) const = default;
};

struct History {
  std::vector<GenerationRecord> generations;
};

struct EvolutionResult {
  Individual best;
  History history;
};

struct EvolveOptions {
  int workers = 1;  // concurrent evaluator calls within a generation
};

/// Runs the full loop. Each distinct genotype is evaluated once per run.
/// The returned best is the highest fitness ever seen, ties going to the
/// earliest evaluated. Evaluator exceptions are rethrown as
/// EvaluationFailure carrying the chromosome text.
EvolutionResult evolve(const GenomeConfig& config, const EvolutionParams& params,
                       Evaluator& evaluator, const EvolveOptions& options = {});

/// Roulette-wheel selection with elitism. The first `elites` entries of the
/// result are the best individuals (stable by index on ties); the rest are
/// drawn with replacement proportionally to fitness, or uniformly when all
/// fitness is zero. Requires every individual to be evaluated.
std::vector<Individual> select(const std::vector<Individual>& population, int elites, Rng& rng);

/// Index drawn from the fitness-proportional wheel.
std::size_t spin_wheel(const std::vector<double>& fitness, Rng& rng);

Chromosome mutate(const Chromosome& chromosome, double rate, Rng& rng);

Chromosome invert(const Chromosome& chromosome, double rate, int seq_length, Rng& rng);
/// Reverses head[start, start + length) of `gene`.
Chromosome invert_at(const Chromosome& chromosome, int gene, int start, int length);

Chromosome transpose(const Chromosome& chromosome, double rate, int seq_length, Rng& rng);
/// Copies head[src_start, src_start + length) of `src_gene` into the head of
/// `dst_gene` at `dst_pos`, shifting right and truncating at the head end.
Chromosome transpose_at(const Chromosome& chromosome, int src_gene, int src_start, int length,
                        int dst_gene, int dst_pos);

std::pair<Chromosome, Chromosome> recombine_two_point(const Chromosome& a, const Chromosome& b,
                                                      Rng& rng);
/// Swaps flat elements [first, last) between the two parents.
std::pair<Chromosome, Chromosome> two_point_at(const Chromosome& a, const Chromosome& b,
                                               std::size_t first, std::size_t last);

std::pair<Chromosome, Chromosome> recombine_gene(const Chromosome& a, const Chromosome& b, Rng& rng);
std::pair<Chromosome, Chromosome> gene_swap_at(const Chromosome& a, const Chromosome& b, int gene);

struct RandomSearchReport {
  Individual best;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::vector<double> fitness;
};

/// Evaluates `count` uniformly random chromosomes once each; no variation.
RandomSearchReport random_search(const GenomeConfig& config, int count, std::uint64_t seed,
                                 Evaluator& evaluator);

/// One JSON object per generation, newline terminated.
std::string history_to_jsonl(const History& history);

/// Throws Error(Parse) naming the offending line; an empty document is an
/// error.
History history_from_jsonl(std::string_view text);

/// "generation,best,mean,evaluations" header plus one row per generation.
std::string history_to_csv(const History& history);

}  // namespace slge
