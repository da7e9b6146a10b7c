#pragma once

// Genotype of the linear generative encoding: fixed-length chromosomes whose
// genes carry a head of graph-rewriting program symbols followed by a tail of
// convolution operations.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace slge {

using Rng = std::mt19937_64;

enum class ProgramSymbol : std::uint8_t { Seq, Cpi, Cpo, End };
enum class ConvOp : std::uint8_t { Conv1x1, Conv1x3, Conv3x1, Conv3x3 };

inline constexpr std::array<ProgramSymbol, 4> kProgramSymbols{
    ProgramSymbol::Seq, ProgramSymbol::Cpi, ProgramSymbol::Cpo,
    ProgramSymbol::End};
inline constexpr std::array<ConvOp, 4> kConvOps{
    ConvOp::Conv1x1, ConvOp::Conv1x3, ConvOp::Conv3x1, ConvOp::Conv3x3};

std::string_view to_string(ProgramSymbol symbol);
std::string_view to_string(ConvOp op);
std::optional<ProgramSymbol> parse_symbol(std::string_view token);
std::optional<ConvOp> parse_conv_op(std::string_view token);

struct KernelShape {
  int height;
  int width;
  int area() const { return height * width; }
};

KernelShape kernel_shape(ConvOp op);

/// A single chromosome position. Either domain may appear anywhere in a
/// decoded or hand-built gene; validate() enforces the head/tail split.
using Element = std::variant<ProgramSymbol, ConvOp>;

std::string_view to_string(const Element& element);

class GenomeConfig {
 public:
  /// Throws Error(InvalidArgument) unless both values are >= 1.
  GenomeConfig(int head_length, int gene_count);

  int head_length() const { return head_length_; }
  int gene_count() const { return gene_count_; }
  int tail_length() const { return head_length_ + 1; }
  int gene_length() const { return 2 * head_length_ + 1; }
  int chromosome_length() const { return gene_count_ * gene_length(); }

  bool operator==(const GenomeConfig&) const = default;

 private:
  int head_length_;
  int gene_count_;
};

struct Gene {
  std::vector<Element> head;
  std::vector<Element> tail;

  bool operator==(const Gene&) const = default;
};

struct Chromosome {
  GenomeConfig config;
  std::vector<Gene> genes;

  /// Concatenation of every gene's head then tail, gene by gene.
  std::vector<Element> flatten() const;
  static Chromosome from_flat(const GenomeConfig& config,
                              const std::vector<Element>& elements);

  bool operator==(const Chromosome&) const = default;
};

struct Violation {
  std::size_t gene;
  std::size_t position;  // index within the head or tail the rule refers to
  std::string rule;

  bool operator==(const Violation&) const = default;
};

std::string to_string(const Violation& violation);

Chromosome random_chromosome(const GenomeConfig& config, Rng& rng);

/// Empty result means the chromosome is well formed. Rules reported:
/// "gene count", "head length", "tail length", "head domain", "tail domain".
std::vector<Violation> validate(const Chromosome& chromosome);

// Canonical text: genes joined by ';', head and tail split by '|', elements
// by ','. No whitespace, case-sensitive.
std::string encode_text(const Chromosome& chromosome);

/// Head length is taken from the first gene. Throws ParseError pointing at
/// the first syntax, domain or length problem.
Chromosome decode_text(std::string_view text);

/// symbols^h * ops^(h+1) * n, as the search-space formula is stated. Throws
/// Error(Overflow) instead of wrapping.
std::uint64_t search_space_size(std::uint64_t head_length,
                                std::uint64_t gene_count,
                                std::uint64_t num_symbols,
                                std::uint64_t num_ops);

/// Number of distinct genotypes: (symbols^h * ops^(h+1))^n. This is the
/// plain combinatorial count, not the formula above.
std::uint64_t genotype_count(std::uint64_t head_length,
                             std::uint64_t gene_count,
                             std::uint64_t num_symbols,
                             std::uint64_t num_ops);

/// Visits every distinct gene for the given head length in lexicographic
/// order of (head, tail) alphabet indices.
void for_each_gene(int head_length, const std::function<void(const Gene&)>& visit);

}  // namespace slge
