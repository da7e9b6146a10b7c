#include "slge/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"
#include "slge/error.hpp"

namespace slge {

namespace {

bool chance(double rate, Rng& rng) {
  if (rate <= 0.0) return false;
  return std::bernoulli_distribution(rate)(rng);
}

int uniform_int(int lo, int hi, Rng& rng) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

template <typename T>
T pick(const std::array<T, 4>& alphabet, Rng& rng) {
  return alphabet[static_cast<std::size_t>(uniform_int(0, 3, rng))];
}

void require_same_config(const Chromosome& a, const Chromosome& b) {
  if (!(a.config == b.config) || a.genes.size() != b.genes.size()) {
    throw Error(ErrorCode::InvalidArgument, "recombination parents have different configs");
  }
}

void require_segment(const Chromosome& c, int seq_length) {
  if (seq_length < 1 || seq_length > c.config.head_length()) {
    throw Error(ErrorCode::InvalidArgument,
                "segment length must be in [1, head length]");
  }
}

}  // namespace

void validate(const EvolutionParams& p) {
  const auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (p.population_size < 1 || p.generations < 1) {
    throw Error(ErrorCode::InvalidArgument, "population size and generations must be >= 1");
  }
  if (p.elites < 0 || p.elites >= p.population_size) {
    throw Error(ErrorCode::InvalidArgument, "elites must be in [0, population size)");
  }
  if (p.seq_length < 1) throw Error(ErrorCode::InvalidArgument, "seq_length must be >= 1");
  for (double r : {p.mutation_rate, p.inversion_rate, p.transposition_rate, p.two_point_rate,
                   p.gene_rate}) {
    if (!rate_ok(r)) throw Error(ErrorCode::InvalidArgument, "rates must lie in [0, 1]");
  }
}

std::size_t spin_wheel(const std::vector<double>& fitness, Rng& rng) {
  if (fitness.empty()) throw Error(ErrorCode::InvalidArgument, "empty wheel");
  const double total = std::accumulate(fitness.begin(), fitness.end(), 0.0);
  if (!(total > 0.0)) {
    return static_cast<std::size_t>(uniform_int(0, static_cast<int>(fitness.size()) - 1, rng));
  }
  const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    if (fitness[i] <= 0.0) continue;
    cumulative += fitness[i];
    last_positive = i;
    if (r < cumulative) return i;
  }
  return last_positive;
}

std::vector<Individual> select(const std::vector<Individual>& population, int elites, Rng& rng) {
  if (elites < 0 || static_cast<std::size_t>(elites) > population.size()) {
    throw Error(ErrorCode::InvalidArgument, "elite count exceeds population");
  }
  std::vector<double> fitness;
  fitness.reserve(population.size());
  for (const auto& ind : population) {
    if (!ind.fitness) throw Error(ErrorCode::InvalidArgument, "select needs evaluated individuals");
    fitness.push_back(*ind.fitness);
  }
  std::vector<std::size_t> ranked(population.size());
  std::iota(ranked.begin(), ranked.end(), 0);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });

  std::vector<Individual> out;
  out.reserve(population.size());
  for (int i = 0; i < elites; ++i) out.push_back(population[ranked[static_cast<std::size_t>(i)]]);
  while (out.size() < population.size()) out.push_back(population[spin_wheel(fitness, rng)]);
  return out;
}

Chromosome mutate(const Chromosome& chromosome, double rate, Rng& rng) {
  Chromosome out = chromosome;
  for (auto& gene : out.genes) {
    for (auto& e : gene.head) {
      if (chance(rate, rng)) e = pick(kProgramSymbols, rng);
    }
    for (auto& e : gene.tail) {
      if (chance(rate, rng)) e = pick(kConvOps, rng);
    }
  }
  return out;
}

Chromosome invert_at(const Chromosome& chromosome, int gene, int start, int length) {
  require_segment(chromosome, length);
  if (gene < 0 || gene >= chromosome.config.gene_count() || start < 0 ||
      start + length > chromosome.config.head_length()) {
    throw Error(ErrorCode::InvalidArgument, "inversion segment out of range");
  }
  Chromosome out = chromosome;
  auto& head = out.genes[static_cast<std::size_t>(gene)].head;
  std::reverse(head.begin() + start, head.begin() + start + length);
  return out;
}

Chromosome invert(const Chromosome& chromosome, double rate, int seq_length, Rng& rng) {
  require_segment(chromosome, seq_length);
  if (!chance(rate, rng)) return chromosome;
  const int gene = uniform_int(0, chromosome.config.gene_count() - 1, rng);
  const int start = uniform_int(0, chromosome.config.head_length() - seq_length, rng);
  return invert_at(chromosome, gene, start, seq_length);
}

Chromosome transpose_at(const Chromosome& chromosome, int src_gene, int src_start, int length,
                        int dst_gene, int dst_pos) {
  require_segment(chromosome, length);
  const int h = chromosome.config.head_length();
  const int n = chromosome.config.gene_count();
  if (src_gene < 0 || src_gene >= n || dst_gene < 0 || dst_gene >= n || src_start < 0 ||
      src_start + length > h || dst_pos < 0 || dst_pos >= h) {
    throw Error(ErrorCode::InvalidArgument, "transposition indices out of range");
  }
  const auto& src = chromosome.genes[static_cast<std::size_t>(src_gene)].head;
  const std::vector<Element> segment(src.begin() + src_start, src.begin() + src_start + length);

  Chromosome out = chromosome;
  auto& head = out.genes[static_cast<std::size_t>(dst_gene)].head;
  head.insert(head.begin() + dst_pos, segment.begin(), segment.end());
  head.resize(static_cast<std::size_t>(h));
  return out;
}

Chromosome transpose(const Chromosome& chromosome, double rate, int seq_length, Rng& rng) {
  require_segment(chromosome, seq_length);
  if (!chance(rate, rng)) return chromosome;
  const int h = chromosome.config.head_length();
  const int n = chromosome.config.gene_count();
  // Insertion sites start at head position 1.
  if (h < 2) return chromosome;
  const int src_gene = uniform_int(0, n - 1, rng);
  const int src_start = uniform_int(0, h - seq_length, rng);
  const int dst_gene = uniform_int(0, n - 1, rng);
  const int dst_pos = uniform_int(1, h - 1, rng);
  return transpose_at(chromosome, src_gene, src_start, seq_length, dst_gene, dst_pos);
}

std::pair<Chromosome, Chromosome> two_point_at(const Chromosome& a, const Chromosome& b,
                                               std::size_t first, std::size_t last) {
  require_same_config(a, b);
  auto fa = a.flatten();
  auto fb = b.flatten();
  if (first > last || last > fa.size()) {
    throw Error(ErrorCode::InvalidArgument, "crossover points out of range");
  }
  std::swap_ranges(fa.begin() + static_cast<std::ptrdiff_t>(first),
                   fa.begin() + static_cast<std::ptrdiff_t>(last),
                   fb.begin() + static_cast<std::ptrdiff_t>(first));
  return {Chromosome::from_flat(a.config, fa), Chromosome::from_flat(b.config, fb)};
}

std::pair<Chromosome, Chromosome> recombine_two_point(const Chromosome& a, const Chromosome& b,
                                                      Rng& rng) {
  require_same_config(a, b);
  const int length = a.config.chromosome_length();
  auto p = static_cast<std::size_t>(uniform_int(0, length, rng));
  auto q = static_cast<std::size_t>(uniform_int(0, length, rng));
  if (p > q) std::swap(p, q);
  return two_point_at(a, b, p, q);
}

std::pair<Chromosome, Chromosome> gene_swap_at(const Chromosome& a, const Chromosome& b,
                                               int gene) {
  require_same_config(a, b);
  if (gene < 0 || gene >= a.config.gene_count()) {
    throw Error(ErrorCode::InvalidArgument, "gene index out of range");
  }
  std::pair<Chromosome, Chromosome> out{a, b};
  std::swap(out.first.genes[static_cast<std::size_t>(gene)],
            out.second.genes[static_cast<std::size_t>(gene)]);
  return out;
}

std::pair<Chromosome, Chromosome> recombine_gene(const Chromosome& a, const Chromosome& b,
                                                 Rng& rng) {
  require_same_config(a, b);
  return gene_swap_at(a, b, uniform_int(0, a.config.gene_count() - 1, rng));
}

namespace {

struct Score {
  double fitness;
  std::uint64_t order;  // global evaluation order within the run
};

/// Evaluates `pending` (distinct chromosomes) with up to `workers` threads.
/// Results are stored by index, so scheduling never affects the outcome.
std::vector<double> evaluate_batch(const std::vector<const Chromosome*>& pending,
                                   Evaluator& evaluator, int workers) {
  std::vector<double> results(pending.size(), 0.0);
  std::vector<std::exception_ptr> errors(pending.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < pending.size(); i = next++) {
      try {
        results[i] = evaluator.evaluate(*pending[i]).value();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(workers, 1));
  if (threads == 1 || pending.size() < 2) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, pending.size()); ++t) pool.emplace_back(work);
  }
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (!errors[i]) continue;
    const std::string text = encode_text(*pending[i]);
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw EvaluationFailure(e.code(), text, e.what());
    } catch (const std::exception& e) {
      throw EvaluationFailure(ErrorCode::Evaluation, text, e.what());
    }
  }
  return results;
}

}  // namespace

EvolutionResult evolve(const GenomeConfig& config, const EvolutionParams& params,
                       Evaluator& evaluator, const EvolveOptions& options) {
  validate(params);
  Rng rng(params.rng_seed);
  const int segment = std::min(params.seq_length, config.head_length());

  std::vector<Individual> population;
  population.reserve(static_cast<std::size_t>(params.population_size));
  for (int i = 0; i < params.population_size; ++i) {
    population.push_back({random_chromosome(config, rng), std::nullopt});
  }

  std::unordered_map<std::string, Score> scores;
  std::uint64_t evaluation_order = 0;
  EvolutionResult result{{population.front().chromosome, std::nullopt}, {}};
  std::optional<Score> best_score;

  for (int gen = 0; gen < params.generations; ++gen) {
    std::vector<std::string> keys;
    std::vector<const Chromosome*> pending;
    std::vector<std::string> pending_keys;
    keys.reserve(population.size());
    for (const auto& ind : population) {
      keys.push_back(encode_text(ind.chromosome));
      const std::string& key = keys.back();
      if (!scores.contains(key) &&
          std::find(pending_keys.begin(), pending_keys.end(), key) == pending_keys.end()) {
        pending.push_back(&ind.chromosome);
        pending_keys.push_back(key);
      }
    }

    const auto values = evaluate_batch(pending, evaluator, options.workers);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const Score score{values[i], evaluation_order++};
      scores.emplace(pending_keys[i], score);
      if (!best_score || score.fitness > best_score->fitness) {
        best_score = score;
        result.best = {*pending[i], score.fitness};
      }
    }

    GenerationRecord record;
    record.generation = gen;
    record.evaluations = pending.size();
    record.cache_hits = population.size() - pending.size();
    std::size_t best_index = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < population.size(); ++i) {
      population[i].fitness = scores.at(keys[i]).fitness;
      sum += *population[i].fitness;
      if (*population[i].fitness > *population[best_index].fitness) best_index = i;
    }
    record.best_fitness = *population[best_index].fitness;
    record.mean_fitness = sum / static_cast<double>(population.size());
    record.best_chromosome = keys[best_index];
    result.history.generations.push_back(record);

    if (gen + 1 == params.generations) break;

    std::vector<Individual> selected = select(population, params.elites, rng);
    std::vector<Individual> offspring(selected.begin() + params.elites, selected.end());
    for (auto& ind : offspring) ind.chromosome = mutate(ind.chromosome, params.mutation_rate, rng);
    for (auto& ind : offspring) {
      ind.chromosome = invert(ind.chromosome, params.inversion_rate, segment, rng);
    }
    for (auto& ind : offspring) {
      ind.chromosome = transpose(ind.chromosome, params.transposition_rate, segment, rng);
    }

    // Random disjoint pairing of the non-elite pool.
    std::vector<std::size_t> order(offspring.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1, rng));
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t i = 0; i + 1 < order.size(); i += 2) {
      auto& a = offspring[order[i]].chromosome;
      auto& b = offspring[order[i + 1]].chromosome;
      if (chance(params.two_point_rate, rng)) std::tie(a, b) = recombine_two_point(a, b, rng);
      if (chance(params.gene_rate, rng)) std::tie(a, b) = recombine_gene(a, b, rng);
    }

    population.assign(selected.begin(), selected.begin() + params.elites);
    for (auto& ind : offspring) {
      ind.fitness.reset();
      population.push_back(std::move(ind));
    }
  }
  return result;
}

RandomSearchReport random_search(const GenomeConfig& config, int count, std::uint64_t seed,
                                 Evaluator& evaluator) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "random search needs count >= 1");
  Rng rng(seed);
  std::optional<RandomSearchReport> report;
  for (int i = 0; i < count; ++i) {
    Chromosome c = random_chromosome(config, rng);
    double f = 0.0;
    try {
      f = evaluator.evaluate(c).value();
    } catch (const Error& e) {
      throw EvaluationFailure(e.code(), encode_text(c), e.what());
    }
    if (!report) report = RandomSearchReport{{c, f}, 0.0, 0.0, {}};
    report->fitness.push_back(f);
    if (f > *report->best.fitness) report->best = {std::move(c), f};
  }
  const double n = static_cast<double>(count);
  report->mean = std::accumulate(report->fitness.begin(), report->fitness.end(), 0.0) / n;
  double sq = 0.0;
  for (double f : report->fitness) sq += (f - report->mean) * (f - report->mean);
  report->stddev = std::sqrt(sq / n);
  return *report;
}

std::string history_to_jsonl(const History& history) {
  std::string out;
  for (const auto& r : history.generations) {
    nlohmann::ordered_json j;
    j["generation"] = r.generation;
    j["best_fitness"] = r.best_fitness;
    j["mean_fitness"] = r.mean_fitness;
    j["best_chromosome"] = r.best_chromosome;
    j["evaluations"] = r.evaluations;
    j["cache_hits"] = r.cache_hits;
    out += j.dump();
    out += '\n';
  }
  return out;
}

History history_from_jsonl(std::string_view text) {
  History history;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      GenerationRecord r;
      r.generation = j.at("generation").get<int>();
      r.best_fitness = j.at("best_fitness").get<double>();
      r.mean_fitness = j.at("mean_fitness").get<double>();
      r.best_chromosome = j.at("best_chromosome").get<std::string>();
      r.evaluations = j.at("evaluations").get<std::uint64_t>();
      r.cache_hits = j.value("cache_hits", std::uint64_t{0});
      history.generations.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::Parse, "history line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (history.generations.empty()) throw Error(ErrorCode::Parse, "history is empty");
  return history;
}

std::string history_to_csv(const History& history) {
  std::string out = "generation,best,mean,evaluations\n";
  for (const auto& r : history.generations) {
    out += std::to_string(r.generation) + ',' + nlohmann::json(r.best_fitness).dump() + ',' +
           nlohmann::json(r.mean_fitness).dump() + ',' + std::to_string(r.evaluations) + '\n';
  }
  return out;
}

}  // namespace slge
