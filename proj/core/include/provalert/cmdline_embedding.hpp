#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace provalert {

enum class EmbeddingStrategy { TokenContext, SubwordNGram, DocumentAverage };

std::string strategy_name(EmbeddingStrategy s);

struct EmbeddingConfig {
  EmbeddingStrategy strategy = EmbeddingStrategy::TokenContext;
  int vector_size = 60;  // >= 8
  int window = 2;        // >= 1
  int ngram_min = 3;
  int ngram_max = 5;
  std::uint64_t seed = 0;
};

struct SimHashSignature {
  std::uint64_t bits = 0;
  std::size_t source_id = 0;
};

class EmbeddingError : public std::runtime_error {
 public:
  enum class Kind { EmptyCorpus, TooFewSamples };
  EmbeddingError(Kind k, const std::string& what)
      : std::runtime_error(what), kind_(k) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Lowercases, splits on whitespace, splits non-flag tokens further on
/// path separators and '='. Flags (leading '-' or '/') stay whole.
std::vector<std::string> tokenize(const std::string& cmdline);

/// One L2-normalized vector per input command-line, index-aligned with
/// the input. Deterministic under (corpus, cfg.seed).
std::vector<std::vector<double>> embed_corpus(
    const std::vector<std::string>& cmdlines, const EmbeddingConfig& cfg);

/// Sign-random-projection SimHash: 64 seeded hyperplanes, bit i set iff
/// the projection onto plane i is non-negative.
SimHashSignature simhash(const std::vector<double>& vector, std::uint64_t seed,
                         std::size_t source_id = 0);

int hamming(const SimHashSignature& a, const SimHashSignature& b);

struct SeparabilityReport {
  std::map<std::string, double> per_strategy;  // mean pairwise Hamming / 64
  EmbeddingStrategy chosen = EmbeddingStrategy::TokenContext;
};

struct EmbeddingSelection {
  EmbeddingStrategy strategy;
  std::vector<std::vector<double>> vectors;  // aligned with input corpus
  SeparabilityReport report;
};

/// Embeds the corpus under all three strategies and keeps the one whose
/// signatures spread distinct command-lines furthest apart. Ties break
/// TokenContext > SubwordNGram > DocumentAverage.
EmbeddingSelection select_embedding(const std::vector<std::string>& cmdlines,
                                    const EmbeddingConfig& base_cfg);

}  // namespace provalert
