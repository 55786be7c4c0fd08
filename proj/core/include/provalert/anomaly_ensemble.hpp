#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "provalert/infopath.hpp"

namespace provalert {

struct DetectorConfig {
  double contamination = 0.5;  // (0, 0.5]
  int neighbors = 300;         // clamped to n-1 at fit time
  std::uint64_t seed = 0;
  int trees = 100;             // isolation forest
  int clusters = 0;            // k-means / mixture; 0 = max(2, ceil(sqrt(n)))
};

struct Verdict {
  std::map<std::string, std::set<std::size_t>> per_detector;
  std::map<std::size_t, int> votes;   // item -> 0..6
  std::set<std::size_t> anomalous;    // votes >= 4
};

class EnsembleError : public std::runtime_error {
 public:
  explicit EnsembleError(const std::string& what) : std::runtime_error(what) {}
};

using Matrix = std::vector<std::vector<double>>;

/// One row per path: mean embedding of its command-lines (zero vector
/// when a path carries none) plus min-max normalized effective length,
/// diversity, and node count.
Matrix featurize_paths(const std::vector<InfoPath>& paths,
                       const ProvenanceGraph& g,
                       const std::map<std::string, std::vector<double>>& vectors,
                       int vector_size);

/// Six unsupervised detectors, each flagging the top ceil(C*n) scores
/// (ties: lower row index). Deterministic under cfg.seed.
std::map<std::string, std::set<std::size_t>> run_detectors(
    const Matrix& X, const DetectorConfig& cfg);

/// Per-detector raw anomaly scores (larger = more anomalous); exposed
/// for explainability and tests.
std::map<std::string, std::vector<double>> detector_scores(
    const Matrix& X, const DetectorConfig& cfg);

/// Strict 4-of-6 majority.
Verdict vote(const std::map<std::string, std::set<std::size_t>>& per_detector);

}  // namespace provalert
