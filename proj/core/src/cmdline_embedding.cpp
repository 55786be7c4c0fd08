#include "provalert/cmdline_embedding.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "rng_util.hpp"

namespace provalert {

namespace {

using detail::gaussian;
using detail::splitmix64;
using detail::uniform01;

std::uint64_t fnv1a(const std::string& s, std::uint64_t salt) {
  std::uint64_t h = 1469598103934665603ull ^ salt;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Deterministic Gaussian vector keyed by a hash.
std::vector<double> hashed_vector(std::uint64_t key, int dim) {
  std::uint64_t state = key;
  std::vector<double> v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gaussian(state);
  return v;
}

void l2_normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm <= 0.0) return;  // zero vector stays zero
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
}

void add_scaled(std::vector<double>& acc, const std::vector<double>& v,
                double scale) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * v[i];
}

// ----- TokenContext: skip-gram with negative sampling, one epoch -----

std::vector<std::vector<double>> embed_token_context(
    const std::vector<std::vector<std::string>>& docs,
    const EmbeddingConfig& cfg) {
  const int dim = cfg.vector_size;

  std::map<std::string, int> vocab;
  for (const auto& doc : docs)
    for (const auto& tok : doc) vocab.try_emplace(tok, 0);
  int next = 0;
  for (auto& [tok, idx] : vocab) idx = next++;
  const int v = (int)vocab.size();

  std::uint64_t rng = cfg.seed * 0x9e3779b97f4a7c15ull + 0x517cc1b727220a95ull;
  std::vector<std::vector<double>> in(v), out_vec(v);
  // Both layers are keyed by token content, not vocabulary position, so
  // commands sharing a token stay correlated regardless of corpus makeup.
  // Unit-scale inits let the single training epoch move co-occurring tokens
  // toward each other by a meaningful amount.
  const double scale = 1.0 / std::sqrt((double)dim);
  for (const auto& [tok, idx] : vocab) {
    std::uint64_t state = fnv1a(tok, cfg.seed * 0x9e3779b97f4a7c15ull +
                                         0x546f6b43747874ull);
    in[idx].resize(dim);
    for (int i = 0; i < dim; ++i) in[idx][i] = gaussian(state) * scale;
    std::uint64_t ostate = fnv1a(tok, cfg.seed * 0x9e3779b97f4a7c15ull +
                                          0x546f6b4374787432ull);
    out_vec[idx].resize(dim);
    for (int i = 0; i < dim; ++i) out_vec[idx][i] = gaussian(ostate) * scale;
  }

  const double lr = 0.05;
  const int negatives = 5;
  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };

  for (const auto& doc : docs) {
    std::vector<int> seq;
    seq.reserve(doc.size());
    for (const auto& tok : doc) seq.push_back(vocab.at(tok));
    for (int pos = 0; pos < (int)seq.size(); ++pos) {
      for (int off = -cfg.window; off <= cfg.window; ++off) {
        if (off == 0) continue;
        int cpos = pos + off;
        if (cpos < 0 || cpos >= (int)seq.size()) continue;
        int target = seq[pos];
        std::vector<double>& h = in[target];
        std::vector<double> grad_h(dim, 0.0);
        for (int k = 0; k <= negatives; ++k) {
          int ctx;
          double label;
          if (k == 0) {
            ctx = seq[cpos];
            label = 1.0;
          } else {
            ctx = (int)(splitmix64(rng) % v);
            if (ctx == seq[cpos]) continue;
            label = 0.0;
          }
          std::vector<double>& o = out_vec[ctx];
          double dot = 0.0;
          for (int i = 0; i < dim; ++i) dot += h[i] * o[i];
          double g = lr * (label - sigmoid(dot));
          for (int i = 0; i < dim; ++i) {
            grad_h[i] += g * o[i];
            o[i] += g * h[i];
          }
        }
        for (int i = 0; i < dim; ++i) h[i] += grad_h[i];
      }
    }
  }

  std::vector<std::vector<double>> result;
  result.reserve(docs.size());
  for (const auto& doc : docs) {
    std::vector<double> vec(dim, 0.0);
    if (!doc.empty()) {
      for (const auto& tok : doc) add_scaled(vec, in[vocab.at(tok)], 1.0);
      for (double& x : vec) x /= (double)doc.size();
    }
    l2_normalize(vec);
    result.push_back(std::move(vec));
  }
  return result;
}

// ----- SubwordNGram: hashed character-n-gram random projections -----

constexpr std::uint64_t kSubwordSalt = 0x5377624e6772616dull;

std::vector<double> subword_token_vector(const std::string& tok,
                                         const EmbeddingConfig& cfg) {
  std::string padded = "<" + tok + ">";
  std::vector<double> vec(cfg.vector_size, 0.0);
  int count = 0;
  for (int n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
    if ((int)padded.size() < n) continue;
    for (std::size_t i = 0; i + n <= padded.size(); ++i) {
      std::uint64_t key = fnv1a(padded.substr(i, n), kSubwordSalt ^ cfg.seed);
      add_scaled(vec, hashed_vector(key, cfg.vector_size), 1.0);
      ++count;
    }
  }
  if (count > 0)
    for (double& x : vec) x /= count;
  return vec;
}

std::vector<std::vector<double>> embed_subword(
    const std::vector<std::vector<std::string>>& docs,
    const EmbeddingConfig& cfg) {
  std::map<std::string, std::vector<double>> token_cache;
  std::vector<std::vector<double>> result;
  result.reserve(docs.size());
  for (const auto& doc : docs) {
    std::vector<double> vec(cfg.vector_size, 0.0);
    if (!doc.empty()) {
      for (const auto& tok : doc) {
        auto [it, inserted] = token_cache.try_emplace(tok);
        if (inserted) it->second = subword_token_vector(tok, cfg);
        add_scaled(vec, it->second, 1.0);
      }
      for (double& x : vec) x /= (double)doc.size();
    }
    l2_normalize(vec);
    result.push_back(std::move(vec));
  }
  return result;
}

// ----- DocumentAverage: bag-of-tokens random projection -----

constexpr std::uint64_t kDocSalt = 0x446f634176677221ull;

std::vector<std::vector<double>> embed_document_average(
    const std::vector<std::vector<std::string>>& docs,
    const EmbeddingConfig& cfg) {
  std::vector<std::vector<double>> result;
  result.reserve(docs.size());
  for (const auto& doc : docs) {
    std::map<std::string, int> counts;
    for (const auto& tok : doc) ++counts[tok];
    std::vector<double> vec(cfg.vector_size, 0.0);
    for (const auto& [tok, c] : counts) {
      std::uint64_t key = fnv1a(tok, kDocSalt ^ cfg.seed);
      add_scaled(vec, hashed_vector(key, cfg.vector_size), (double)c);
    }
    l2_normalize(vec);
    result.push_back(std::move(vec));
  }
  return result;
}

}  // namespace

std::string strategy_name(EmbeddingStrategy s) {
  switch (s) {
    case EmbeddingStrategy::TokenContext: return "token-context";
    case EmbeddingStrategy::SubwordNGram: return "subword-ngram";
    default: return "document-average";
  }
}

std::vector<std::string> tokenize(const std::string& cmdline) {
  std::string lower;
  lower.reserve(cmdline.size());
  for (char c : cmdline) lower.push_back((char)std::tolower((unsigned char)c));

  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < lower.size()) {
    while (i < lower.size() && std::isspace((unsigned char)lower[i])) ++i;
    if (i >= lower.size()) break;
    std::size_t j = i;
    while (j < lower.size() && !std::isspace((unsigned char)lower[j])) ++j;
    std::string raw = lower.substr(i, j - i);
    i = j;

    if (raw[0] == '-' || raw[0] == '/') {
      out.push_back(raw);  // flag tokens stay whole
      continue;
    }
    std::string piece;
    for (char c : raw) {
      if (c == '/' || c == '\\' || c == '=') {
        if (!piece.empty()) out.push_back(piece);
        piece.clear();
      } else {
        piece.push_back(c);
      }
    }
    if (!piece.empty()) out.push_back(piece);
  }
  return out;
}

std::vector<std::vector<double>> embed_corpus(
    const std::vector<std::string>& cmdlines, const EmbeddingConfig& cfg) {
  if (cmdlines.empty()) {
    throw EmbeddingError(EmbeddingError::Kind::EmptyCorpus, "empty corpus");
  }

  // Training runs over the sorted distinct corpus so that vectors do not
  // depend on input order or duplication.
  std::vector<std::string> distinct(cmdlines);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<std::vector<std::string>> docs;
  docs.reserve(distinct.size());
  for (const auto& c : distinct) docs.push_back(tokenize(c));

  std::vector<std::vector<double>> trained;
  switch (cfg.strategy) {
    case EmbeddingStrategy::TokenContext:
      trained = embed_token_context(docs, cfg);
      break;
    case EmbeddingStrategy::SubwordNGram:
      trained = embed_subword(docs, cfg);
      break;
    default:
      trained = embed_document_average(docs, cfg);
  }

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < distinct.size(); ++i) index[distinct[i]] = i;

  std::vector<std::vector<double>> result;
  result.reserve(cmdlines.size());
  for (const auto& c : cmdlines) result.push_back(trained[index.at(c)]);
  return result;
}

SimHashSignature simhash(const std::vector<double>& vector, std::uint64_t seed,
                         std::size_t source_id) {
  SimHashSignature sig;
  sig.source_id = source_id;
  const int dim = (int)vector.size();
  std::uint64_t state = seed ^ 0x53696d4861736821ull;
  for (int bit = 0; bit < 64; ++bit) {
    double dot = 0.0;
    for (int i = 0; i < dim; ++i) dot += vector[i] * gaussian(state);
    if (dot >= 0.0) sig.bits |= (1ull << bit);
  }
  return sig;
}

int hamming(const SimHashSignature& a, const SimHashSignature& b) {
  return std::popcount(a.bits ^ b.bits);
}

EmbeddingSelection select_embedding(const std::vector<std::string>& cmdlines,
                                    const EmbeddingConfig& base_cfg) {
  std::set<std::string> distinct(cmdlines.begin(), cmdlines.end());
  if (distinct.size() < 2) {
    throw EmbeddingError(EmbeddingError::Kind::TooFewSamples,
                         "need >= 2 distinct command-lines");
  }
  std::vector<std::string> samples(distinct.begin(), distinct.end());

  const EmbeddingStrategy strategies[] = {EmbeddingStrategy::TokenContext,
                                          EmbeddingStrategy::SubwordNGram,
                                          EmbeddingStrategy::DocumentAverage};

  EmbeddingSelection best;
  double best_score = -1.0;
  for (EmbeddingStrategy s : strategies) {
    EmbeddingConfig cfg = base_cfg;
    cfg.strategy = s;
    auto vectors = embed_corpus(samples, cfg);

    std::vector<SimHashSignature> sigs;
    sigs.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i)
      sigs.push_back(simhash(vectors[i], cfg.seed, i));

    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < sigs.size(); ++i) {
      for (std::size_t j = i + 1; j < sigs.size(); ++j) {
        total += hamming(sigs[i], sigs[j]);
        ++pairs;
      }
    }
    double score = pairs ? total / (64.0 * pairs) : 0.0;
    best.report.per_strategy[strategy_name(s)] = score;

    if (score > best_score) {  // strict: earlier strategies win ties
      best_score = score;
      best.strategy = s;
      best.vectors = embed_corpus(cmdlines, cfg);
    }
  }
  best.report.chosen = best.strategy;
  return best;
}

}  // namespace provalert
