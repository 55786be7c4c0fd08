#include "provalert/anomaly_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rng_util.hpp"

namespace provalert {

namespace {

using detail::splitmix64;
using detail::uniform01;

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

// ---------- isolation forest ----------

double harmonic_path_normalizer(int n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double euler = 0.5772156649015329;
  double h = std::log(n - 1) + euler;
  return 2.0 * h - 2.0 * (n - 1.0) / n;
}

struct IsoNode {
  int feature = -1;
  double split = 0.0;
  int left = -1, right = -1;
  int size = 0;  // external node population
};

struct IsoTree {
  std::vector<IsoNode> nodes;

  int build(const Matrix& X, std::vector<int> idx, int depth, int max_depth,
            std::uint64_t& rng) {
    IsoNode node;
    node.size = (int)idx.size();
    if ((int)idx.size() <= 1 || depth >= max_depth) {
      nodes.push_back(node);
      return (int)nodes.size() - 1;
    }
    const int dims = (int)X[0].size();
    // Pick among features that still vary on this partition.
    std::vector<int> usable;
    for (int f = 0; f < dims; ++f) {
      double lo = X[idx[0]][f], hi = lo;
      for (int i : idx) {
        lo = std::min(lo, X[i][f]);
        hi = std::max(hi, X[i][f]);
      }
      if (hi > lo) usable.push_back(f);
    }
    if (usable.empty()) {
      nodes.push_back(node);
      return (int)nodes.size() - 1;
    }
    int f = usable[splitmix64(rng) % usable.size()];
    double lo = X[idx[0]][f], hi = lo;
    for (int i : idx) {
      lo = std::min(lo, X[i][f]);
      hi = std::max(hi, X[i][f]);
    }
    double split = lo + uniform01(rng) * (hi - lo);

    std::vector<int> left, right;
    for (int i : idx) (X[i][f] < split ? left : right).push_back(i);
    if (left.empty() || right.empty()) {
      nodes.push_back(node);
      return (int)nodes.size() - 1;
    }
    node.feature = f;
    node.split = split;
    int self = (int)nodes.size();
    nodes.push_back(node);
    int l = build(X, std::move(left), depth + 1, max_depth, rng);
    int r = build(X, std::move(right), depth + 1, max_depth, rng);
    nodes[self].left = l;
    nodes[self].right = r;
    return self;
  }

  double path_length(const std::vector<double>& x) const {
    int cur = 0;
    double depth = 0.0;
    while (nodes[cur].feature >= 0) {
      cur = x[nodes[cur].feature] < nodes[cur].split ? nodes[cur].left
                                                     : nodes[cur].right;
      depth += 1.0;
    }
    return depth + harmonic_path_normalizer(nodes[cur].size);
  }
};

std::vector<double> isolation_forest_scores(const Matrix& X,
                                            const DetectorConfig& cfg) {
  const int n = (int)X.size();
  const int subsample = std::min(256, n);
  const int max_depth = (int)std::ceil(std::log2(std::max(2, subsample)));
  std::uint64_t rng = cfg.seed ^ 0x49736f466f726573ull;

  std::vector<double> avg_depth(n, 0.0);
  for (int t = 0; t < cfg.trees; ++t) {
    // Seeded subsample without replacement (partial Fisher-Yates).
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < subsample; ++i) {
      int j = i + (int)(splitmix64(rng) % (n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(subsample);

    IsoTree tree;
    tree.build(X, pool, 0, max_depth, rng);
    for (int i = 0; i < n; ++i) avg_depth[i] += tree.path_length(X[i]);
  }
  const double c = std::max(harmonic_path_normalizer(subsample), 1e-9);
  std::vector<double> scores(n);
  for (int i = 0; i < n; ++i) {
    scores[i] = std::pow(2.0, -(avg_depth[i] / cfg.trees) / c);
  }
  return scores;
}

// ---------- local outlier factor ----------

std::vector<double> lof_scores(const Matrix& X, const DetectorConfig& cfg) {
  const int n = (int)X.size();
  const int k = std::max(1, std::min(cfg.neighbors, n - 1));

  Matrix dist(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double d = std::sqrt(sq_distance(X[i], X[j]));
      dist[i][j] = d;
      dist[j][i] = d;
    }
  }

  // k-distance and neighborhood = everyone within k-distance, which
  // keeps the result permutation-invariant under distance ties.
  std::vector<double> kdist(n);
  std::vector<std::vector<int>> neigh(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> ds;
    ds.reserve(n - 1);
    for (int j = 0; j < n; ++j)
      if (j != i) ds.push_back(dist[i][j]);
    std::nth_element(ds.begin(), ds.begin() + (k - 1), ds.end());
    kdist[i] = ds[k - 1];
    for (int j = 0; j < n; ++j)
      if (j != i && dist[i][j] <= kdist[i]) neigh[i].push_back(j);
  }

  std::vector<double> lrd(n);
  for (int i = 0; i < n; ++i) {
    double reach_sum = 0.0;
    for (int j : neigh[i]) reach_sum += std::max(kdist[j], dist[i][j]);
    double mean_reach = reach_sum / (double)neigh[i].size();
    lrd[i] = 1.0 / std::max(mean_reach, 1e-12);
  }

  std::vector<double> scores(n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j : neigh[i]) sum += lrd[j];
    scores[i] = sum / ((double)neigh[i].size() * lrd[i]);
  }
  return scores;
}

// ---------- hypersphere around the coordinate-wise median ----------

std::vector<double> hypersphere_scores(const Matrix& X) {
  const int n = (int)X.size();
  const int dims = (int)X[0].size();
  std::vector<double> center(dims);
  std::vector<double> column(n);
  for (int f = 0; f < dims; ++f) {
    for (int i = 0; i < n; ++i) column[i] = X[i][f];
    std::sort(column.begin(), column.end());
    center[f] = n % 2 ? column[n / 2]
                      : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  std::vector<double> scores(n);
  for (int i = 0; i < n; ++i) scores[i] = std::sqrt(sq_distance(X[i], center));
  return scores;
}

// ---------- ridge Mahalanobis envelope ----------

std::vector<double> mahalanobis_scores(const Matrix& X) {
  const int n = (int)X.size();
  const int d = (int)X[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& row : X)
    for (int f = 0; f < d; ++f) mean[f] += row[f];
  for (double& m : mean) m /= n;

  // Empirical covariance with lambda * I ridge.
  Matrix cov(d, std::vector<double>(d, 0.0));
  for (const auto& row : X) {
    for (int a = 0; a < d; ++a) {
      double da = row[a] - mean[a];
      for (int b = a; b < d; ++b) cov[a][b] += da * (row[b] - mean[b]);
    }
  }
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      cov[a][b] /= n;
      cov[b][a] = cov[a][b];
    }
    cov[a][a] += 1e-3;
  }

  // Cholesky factorization, cov = L L^T.
  Matrix L(d, std::vector<double>(d, 0.0));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = cov[i][j];
      for (int k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
      if (i == j) {
        L[i][i] = std::sqrt(std::max(s, 1e-12));
      } else {
        L[i][j] = s / L[j][j];
      }
    }
  }

  std::vector<double> scores(n);
  std::vector<double> y(d);
  for (int i = 0; i < n; ++i) {
    // Solve L y = (x - mean); Mahalanobis^2 = ||y||^2.
    for (int a = 0; a < d; ++a) {
      double s = X[i][a] - mean[a];
      for (int k = 0; k < a; ++k) s -= L[a][k] * y[k];
      y[a] = s / L[a][a];
    }
    double m2 = 0.0;
    for (int a = 0; a < d; ++a) m2 += y[a] * y[a];
    scores[i] = std::sqrt(m2);
  }
  return scores;
}

// ---------- seeded k-means++ ----------

Matrix kmeanspp_init(const Matrix& X, int k, std::uint64_t& rng) {
  const int n = (int)X.size();
  Matrix centroids;
  centroids.push_back(X[splitmix64(rng) % n]);
  std::vector<double> d2(n);
  while ((int)centroids.size() < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : centroids) best = std::min(best, sq_distance(X[i], c));
      d2[i] = best;
      total += best;
    }
    int pick = 0;
    if (total > 0.0) {
      double r = uniform01(rng) * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = (int)(splitmix64(rng) % n);
    }
    centroids.push_back(X[pick]);
  }
  return centroids;
}

Matrix kmeans_fit(const Matrix& X, int k, std::uint64_t seed) {
  const int n = (int)X.size();
  const int d = (int)X[0].size();
  std::uint64_t rng = seed;
  Matrix centroids = kmeanspp_init(X, k, rng);

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_distance(X[i], centroids[0]);
      for (int c = 1; c < k; ++c) {
        double dd = sq_distance(X[i], centroids[c]);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
    }
    Matrix sums(k, std::vector<double>(d, 0.0));
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (int f = 0; f < d; ++f) sums[assign[i]][f] += X[i][f];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (int f = 0; f < d; ++f) centroids[c][f] = sums[c][f] / counts[c];
    }
    if (!changed && iter > 0) break;
  }
  return centroids;
}

int effective_k(const DetectorConfig& cfg, int n) {
  int k = cfg.clusters > 0
              ? cfg.clusters
              : std::max(2, (int)std::ceil(std::sqrt((double)n)));
  return std::min(k, n);
}

std::vector<double> kmeans_scores(const Matrix& X, const DetectorConfig& cfg) {
  const int n = (int)X.size();
  const int k = effective_k(cfg, n);
  Matrix centroids = kmeans_fit(X, k, cfg.seed ^ 0x6b4d65616e732b2bull);
  std::vector<double> scores(n);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::max();
    for (const auto& c : centroids) best = std::min(best, sq_distance(X[i], c));
    scores[i] = std::sqrt(best);
  }
  return scores;
}

// ---------- diagonal Gaussian mixture ----------

std::vector<double> gmm_scores(const Matrix& X, const DetectorConfig& cfg) {
  const int n = (int)X.size();
  const int d = (int)X[0].size();
  const int k = effective_k(cfg, n);
  constexpr double kVarFloor = 1e-6;

  std::uint64_t rng = cfg.seed ^ 0x474d4d6469616721ull;
  Matrix means = kmeanspp_init(X, k, rng);

  std::vector<double> global_var(d, 0.0), global_mean(d, 0.0);
  for (const auto& row : X)
    for (int f = 0; f < d; ++f) global_mean[f] += row[f];
  for (double& m : global_mean) m /= n;
  for (const auto& row : X)
    for (int f = 0; f < d; ++f) {
      double diff = row[f] - global_mean[f];
      global_var[f] += diff * diff;
    }
  for (double& v : global_var) v = std::max(v / n, kVarFloor);

  Matrix vars(k, global_var);
  std::vector<double> weights(k, 1.0 / k);

  auto log_component = [&](int c, const std::vector<double>& x) {
    double lp = 0.0;
    for (int f = 0; f < d; ++f) {
      double diff = x[f] - means[c][f];
      lp += -0.5 * (std::log(2.0 * M_PI * vars[c][f]) + diff * diff / vars[c][f]);
    }
    return lp + std::log(weights[c]);
  };

  Matrix resp(n, std::vector<double>(k, 0.0));
  for (int iter = 0; iter < 50; ++iter) {
    // E step (log-sum-exp).
    for (int i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::max();
      std::vector<double> lp(k);
      for (int c = 0; c < k; ++c) {
        lp[c] = log_component(c, X[i]);
        mx = std::max(mx, lp[c]);
      }
      double z = 0.0;
      for (int c = 0; c < k; ++c) z += std::exp(lp[c] - mx);
      for (int c = 0; c < k; ++c) resp[i][c] = std::exp(lp[c] - mx) / z;
    }
    // M step.
    for (int c = 0; c < k; ++c) {
      double nc = 0.0;
      for (int i = 0; i < n; ++i) nc += resp[i][c];
      if (nc < 1e-10) continue;
      weights[c] = nc / n;
      for (int f = 0; f < d; ++f) {
        double m = 0.0;
        for (int i = 0; i < n; ++i) m += resp[i][c] * X[i][f];
        means[c][f] = m / nc;
      }
      for (int f = 0; f < d; ++f) {
        double v = 0.0;
        for (int i = 0; i < n; ++i) {
          double diff = X[i][f] - means[c][f];
          v += resp[i][c] * diff * diff;
        }
        vars[c][f] = std::max(v / nc, kVarFloor);
      }
    }
  }

  std::vector<double> scores(n);
  for (int i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::max();
    std::vector<double> lp(k);
    for (int c = 0; c < k; ++c) {
      lp[c] = log_component(c, X[i]);
      mx = std::max(mx, lp[c]);
    }
    double z = 0.0;
    for (int c = 0; c < k; ++c) z += std::exp(lp[c] - mx);
    scores[i] = -(mx + std::log(z));  // negative log-likelihood
  }
  return scores;
}

std::set<std::size_t> flag_top(const std::vector<double>& scores, double c) {
  const std::size_t n = scores.size();
  const std::size_t m = (std::size_t)std::ceil(c * (double)n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // tie: lower row index first
  });
  std::set<std::size_t> flags;
  for (std::size_t i = 0; i < m && i < n; ++i) flags.insert(idx[i]);
  return flags;
}

}  // namespace

Matrix featurize_paths(const std::vector<InfoPath>& paths,
                       const ProvenanceGraph& g,
                       const std::map<std::string, std::vector<double>>& vectors,
                       int vector_size) {
  const std::size_t n = paths.size();
  Matrix X(n, std::vector<double>(vector_size + 3, 0.0));

  for (std::size_t p = 0; p < n; ++p) {
    int count = 0;
    for (const auto& id : paths[p].nodes) {
      for (const auto& c : g.nodes.at(id).cmdlines) {
        auto it = vectors.find(c);
        if (it == vectors.end()) continue;
        for (int f = 0; f < vector_size; ++f) X[p][f] += it->second[f];
        ++count;
      }
    }
    if (count > 0)
      for (int f = 0; f < vector_size; ++f) X[p][f] /= count;
  }

  // Scalar tail: effective length, diversity, node count, each min-max
  // normalized across paths (all-equal -> 0.5).
  auto scalar = [&](std::size_t p, int which) -> double {
    switch (which) {
      case 0: return paths[p].effective_length;
      case 1: return (double)paths[p].diversity;
      default: return (double)paths[p].nodes.size();
    }
  };
  for (int which = 0; which < 3; ++which) {
    double lo = std::numeric_limits<double>::max(), hi = -lo;
    for (std::size_t p = 0; p < n; ++p) {
      lo = std::min(lo, scalar(p, which));
      hi = std::max(hi, scalar(p, which));
    }
    for (std::size_t p = 0; p < n; ++p) {
      X[p][vector_size + which] =
          hi == lo ? 0.5 : (scalar(p, which) - lo) / (hi - lo);
    }
  }
  return X;
}

std::map<std::string, std::vector<double>> detector_scores(
    const Matrix& X, const DetectorConfig& cfg) {
  if (X.size() < 2) throw EnsembleError("need at least 2 rows");
  std::map<std::string, std::vector<double>> out;
  out["isolation-forest"] = isolation_forest_scores(X, cfg);
  out["local-outlier-factor"] = lof_scores(X, cfg);
  out["hypersphere"] = hypersphere_scores(X);
  out["mahalanobis-envelope"] = mahalanobis_scores(X);
  out["k-means-distance"] = kmeans_scores(X, cfg);
  out["gaussian-mixture"] = gmm_scores(X, cfg);
  return out;
}

std::map<std::string, std::set<std::size_t>> run_detectors(
    const Matrix& X, const DetectorConfig& cfg) {
  auto scores = detector_scores(X, cfg);
  std::map<std::string, std::set<std::size_t>> out;
  for (const auto& [name, s] : scores) out[name] = flag_top(s, cfg.contamination);
  return out;
}

Verdict vote(const std::map<std::string, std::set<std::size_t>>& per_detector) {
  Verdict v;
  v.per_detector = per_detector;
  for (const auto& [name, flags] : per_detector) {
    for (std::size_t i : flags) ++v.votes[i];
  }
  for (const auto& [i, n] : v.votes) {
    if (n >= 4) v.anomalous.insert(i);
  }
  return v;
}

}  // namespace provalert
