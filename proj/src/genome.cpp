#include "slge/genome.hpp"

#include <sstream>

#include "slge/error.hpp"

namespace slge {

namespace {

constexpr std::array<std::string_view, 4> kSymbolNames{"SEQ", "CPI", "CPO",
                                                       "END"};
constexpr std::array<std::string_view, 4> kOpNames{"Conv1x1", "Conv1x3",
                                                   "Conv3x1", "Conv3x3"};

template <typename T>
T uniform_pick(const std::array<T, 4>& alphabet, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, alphabet.size() - 1);
  return alphabet[dist(rng)];
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw Error(ErrorCode::Overflow, "search space size overflows 64 bits");
  }
  return out;
}

std::uint64_t checked_pow(std::uint64_t base, std::uint64_t exponent) {
  std::uint64_t out = 1;
  for (std::uint64_t i = 0; i < exponent; ++i) out = checked_mul(out, base);
  return out;
}

void require_positive(std::uint64_t h, std::uint64_t n, std::uint64_t s,
                      std::uint64_t o) {
  if (h == 0 || n == 0 || s == 0 || o == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "search space arguments must be positive");
  }
}

}  // namespace

std::string_view to_string(ProgramSymbol symbol) {
  return kSymbolNames[static_cast<std::size_t>(symbol)];
}

std::string_view to_string(ConvOp op) {
  return kOpNames[static_cast<std::size_t>(op)];
}

std::string_view to_string(const Element& element) {
  return std::visit([](auto value) { return to_string(value); }, element);
}

std::optional<ProgramSymbol> parse_symbol(std::string_view token) {
  for (std::size_t i = 0; i < kSymbolNames.size(); ++i) {
    if (kSymbolNames[i] == token) return kProgramSymbols[i];
  }
  return std::nullopt;
}

std::optional<ConvOp> parse_conv_op(std::string_view token) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == token) return kConvOps[i];
  }
  return std::nullopt;
}

KernelShape kernel_shape(ConvOp op) {
  switch (op) {
    case ConvOp::Conv1x1: return {1, 1};
    case ConvOp::Conv1x3: return {1, 3};
    case ConvOp::Conv3x1: return {3, 1};
    case ConvOp::Conv3x3: return {3, 3};
  }
  return {0, 0};
}

GenomeConfig::GenomeConfig(int head_length, int gene_count)
    : head_length_(head_length), gene_count_(gene_count) {
  if (head_length < 1 || gene_count < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "head length and gene count must be >= 1");
  }
}

std::vector<Element> Chromosome::flatten() const {
  std::vector<Element> flat;
  flat.reserve(static_cast<std::size_t>(config.chromosome_length()));
  for (const auto& gene : genes) {
    flat.insert(flat.end(), gene.head.begin(), gene.head.end());
    flat.insert(flat.end(), gene.tail.begin(), gene.tail.end());
  }
  return flat;
}

Chromosome Chromosome::from_flat(const GenomeConfig& config,
                                 const std::vector<Element>& elements) {
  if (elements.size() != static_cast<std::size_t>(config.chromosome_length())) {
    throw Error(ErrorCode::InvalidArgument,
                "flat element count does not match the genome config");
  }
  const auto h = static_cast<std::size_t>(config.head_length());
  const auto t = static_cast<std::size_t>(config.tail_length());
  Chromosome out{config, {}};
  out.genes.reserve(static_cast<std::size_t>(config.gene_count()));
  for (auto it = elements.begin(); it != elements.end(); it += h + t) {
    out.genes.push_back(Gene{{it, it + h}, {it + h, it + h + t}});
  }
  return out;
}

std::string to_string(const Violation& violation) {
  std::ostringstream os;
  os << violation.rule << " (gene " << violation.gene << ", position "
     << violation.position << ")";
  return os.str();
}

Chromosome random_chromosome(const GenomeConfig& config, Rng& rng) {
  Chromosome out{config, {}};
  out.genes.resize(static_cast<std::size_t>(config.gene_count()));
  for (auto& gene : out.genes) {
    gene.head.reserve(static_cast<std::size_t>(config.head_length()));
    gene.tail.reserve(static_cast<std::size_t>(config.tail_length()));
    for (int i = 0; i < config.head_length(); ++i) {
      gene.head.emplace_back(uniform_pick(kProgramSymbols, rng));
    }
    for (int i = 0; i < config.tail_length(); ++i) {
      gene.tail.emplace_back(uniform_pick(kConvOps, rng));
    }
  }
  return out;
}

std::vector<Violation> validate(const Chromosome& chromosome) {
  std::vector<Violation> out;
  const auto& cfg = chromosome.config;
  if (chromosome.genes.size() != static_cast<std::size_t>(cfg.gene_count())) {
    out.push_back({chromosome.genes.size(), 0, "gene count"});
  }
  for (std::size_t g = 0; g < chromosome.genes.size(); ++g) {
    const Gene& gene = chromosome.genes[g];
    if (gene.head.size() != static_cast<std::size_t>(cfg.head_length())) {
      out.push_back({g, gene.head.size(), "head length"});
    }
    if (gene.tail.size() != static_cast<std::size_t>(cfg.tail_length())) {
      out.push_back({g, gene.tail.size(), "tail length"});
    }
    for (std::size_t i = 0; i < gene.head.size(); ++i) {
      if (!std::holds_alternative<ProgramSymbol>(gene.head[i])) {
        out.push_back({g, i, "head domain"});
      }
    }
    for (std::size_t i = 0; i < gene.tail.size(); ++i) {
      if (!std::holds_alternative<ConvOp>(gene.tail[i])) {
        out.push_back({g, i, "tail domain"});
      }
    }
  }
  return out;
}

std::string encode_text(const Chromosome& chromosome) {
  std::string out;
  for (std::size_t g = 0; g < chromosome.genes.size(); ++g) {
    if (g > 0) out += ';';
    const Gene& gene = chromosome.genes[g];
    for (std::size_t i = 0; i < gene.head.size(); ++i) {
      if (i > 0) out += ',';
      out += to_string(gene.head[i]);
    }
    out += '|';
    for (std::size_t i = 0; i < gene.tail.size(); ++i) {
      if (i > 0) out += ',';
      out += to_string(gene.tail[i]);
    }
  }
  return out;
}

namespace {

struct Token {
  Element element;
  std::size_t offset;
};

struct ParsedGene {
  std::vector<Token> head;
  std::vector<Token> tail;
  std::size_t head_offset;
  std::size_t tail_offset;
};

std::vector<Token> parse_elements(std::string_view text, std::size_t base) {
  std::vector<Token> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    const std::string_view token = text.substr(
        start, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - start);
    if (token.empty()) throw ParseError(base + start, "empty element");
    if (auto symbol = parse_symbol(token)) {
      out.push_back({*symbol, base + start});
    } else if (auto op = parse_conv_op(token)) {
      out.push_back({*op, base + start});
    } else {
      throw ParseError(base + start,
                       "unknown element '" + std::string(token) + "'");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Chromosome decode_text(std::string_view text) {
  if (text.empty()) throw ParseError(0, "empty chromosome text");

  std::vector<ParsedGene> parsed;
  std::size_t gene_start = 0;
  while (true) {
    const std::size_t semi = text.find(';', gene_start);
    const std::size_t gene_end =
        semi == std::string_view::npos ? text.size() : semi;
    const std::string_view gene_text =
        text.substr(gene_start, gene_end - gene_start);
    const std::size_t bar = gene_text.find('|');
    if (bar == std::string_view::npos) {
      throw ParseError(gene_start, "gene is missing the '|' separator");
    }
    if (gene_text.find('|', bar + 1) != std::string_view::npos) {
      throw ParseError(gene_start + gene_text.find('|', bar + 1),
                       "gene has more than one '|' separator");
    }
    ParsedGene gene;
    gene.head_offset = gene_start;
    gene.tail_offset = gene_start + bar + 1;
    gene.head = parse_elements(gene_text.substr(0, bar), gene.head_offset);
    gene.tail = parse_elements(gene_text.substr(bar + 1), gene.tail_offset);
    parsed.push_back(std::move(gene));
    if (semi == std::string_view::npos) break;
    gene_start = semi + 1;
  }

  const auto head_length = static_cast<int>(parsed.front().head.size());
  Chromosome out{GenomeConfig(head_length, static_cast<int>(parsed.size())),
                 {}};
  for (const auto& gene : parsed) {
    Gene g;
    for (const auto& token : gene.head) g.head.push_back(token.element);
    for (const auto& token : gene.tail) g.tail.push_back(token.element);
    out.genes.push_back(std::move(g));
  }

  const auto violations = validate(out);
  if (!violations.empty()) {
    const Violation& v = violations.front();
    const ParsedGene& gene = parsed[v.gene];
    std::size_t offset = gene.head_offset;
    if (v.rule == "tail length") {
      offset = gene.tail_offset;
    } else if (v.rule == "head domain") {
      offset = gene.head[v.position].offset;
    } else if (v.rule == "tail domain") {
      offset = gene.tail[v.position].offset;
    }
    throw ParseError(offset, to_string(v));
  }
  return out;
}

std::uint64_t search_space_size(std::uint64_t head_length,
                                std::uint64_t gene_count,
                                std::uint64_t num_symbols,
                                std::uint64_t num_ops) {
  require_positive(head_length, gene_count, num_symbols, num_ops);
  return checked_mul(checked_mul(checked_pow(num_symbols, head_length),
                                 checked_pow(num_ops, head_length + 1)),
                     gene_count);
}

std::uint64_t genotype_count(std::uint64_t head_length,
                             std::uint64_t gene_count,
                             std::uint64_t num_symbols,
                             std::uint64_t num_ops) {
  require_positive(head_length, gene_count, num_symbols, num_ops);
  const std::uint64_t per_gene = checked_mul(
      checked_pow(num_symbols, head_length), checked_pow(num_ops, head_length + 1));
  return checked_pow(per_gene, gene_count);
}

void for_each_gene(int head_length,
                   const std::function<void(const Gene&)>& visit) {
  if (head_length < 1) {
    throw Error(ErrorCode::InvalidArgument, "head length must be >= 1");
  }
  const auto length = static_cast<std::size_t>(2 * head_length + 1);
  const auto h = static_cast<std::size_t>(head_length);
  // Odometer over alphabet indices; the last position varies fastest.
  std::vector<std::size_t> digits(length, 0);
  Gene gene;
  while (true) {
    gene.head.clear();
    gene.tail.clear();
    for (std::size_t i = 0; i < h; ++i) gene.head.emplace_back(kProgramSymbols[digits[i]]);
    for (std::size_t i = h; i < length; ++i) gene.tail.emplace_back(kConvOps[digits[i]]);
    visit(gene);

    std::size_t pos = length;
    while (pos > 0) {
      --pos;
      if (++digits[pos] < 4) break;
      digits[pos] = 0;
      if (pos == 0) return;
    }
  }
}

}  // namespace slge
