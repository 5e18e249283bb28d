#pragma once

// SNE embedding pipeline: normalize -> PCA -> similarities -> optimizer.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "scvr/harness/common.hpp"
#include "scvr/optimizers.hpp"
#include "scvr/problems/dataset.hpp"
#include "scvr/problems/sne.hpp"

namespace scvr::harness {

struct SnePipeline {
  bool normalize = true;
  std::size_t pca = 30;          // 0 = keep all features
  std::vector<double> sigma;     // empty = auto_sigma(data, perplexity)
  double perplexity = 10.0;      // clamped to n-1
  std::size_t embed_dim = 2;
  std::uint64_t constants_seed = 11;
};

/// Per-sample bandwidths whose similarity rows have the given perplexity
/// exp(entropy), found by bisection on log sigma.
inline std::vector<double> perplexity_sigma(const Dataset& data, double perplexity) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw ConstructionError("sne: need at least 2 samples");
  if (!(perplexity >= 1.0) || perplexity > static_cast<double>(n - 1))
    throw ConstructionError("sne: perplexity must lie in [1, n-1]");
  const double target = std::log(perplexity);
  std::vector<double> sigma(static_cast<std::size_t>(n));
  Eigen::VectorXd d2(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = (data.values.row(t) - data.values.row(i)).squaredNorm();
    d2[t] = std::numeric_limits<double>::infinity();
    const double nearest = d2.minCoeff();
    // Entropy of the row at bandwidth s, shifted by the nearest distance for stability.
    auto entropy = [&](double s) {
      double z = 0.0, acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i == t) continue;
        const double e = (d2[i] - nearest) / (2.0 * s * s);
        const double w = std::exp(-e);
        z += w;
        acc += w * e;
      }
      return std::log(z) + acc / z;
    };
    double lo = std::log(1e-8), hi = std::log(1e8);
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (entropy(std::exp(mid)) < target ? lo : hi) = mid;
    }
    sigma[static_cast<std::size_t>(t)] = std::exp(0.5 * (lo + hi));
  }
  return sigma;
}

/// One global bandwidth: the median of the per-sample bandwidths at the given
/// perplexity (clamped to n-1).
inline double auto_sigma(const Dataset& data, double perplexity = 10.0) {
  std::vector<double> s =
      perplexity_sigma(data, std::min(perplexity, static_cast<double>(data.rows() - 1)));
  auto mid = s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2);
  std::nth_element(s.begin(), mid, s.end());
  return *mid;
}

/// Preprocessed features that enter the similarity matrix.
inline Dataset preprocess(const Dataset& raw, const SnePipeline& cfg) {
  Dataset data = cfg.normalize ? normalize(raw) : raw;
  if (cfg.pca > 0) {
    const Eigen::Index k =
        std::min<Eigen::Index>(static_cast<Eigen::Index>(cfg.pca),
                               std::min(data.rows() - 1, data.cols()));
    if (k < data.cols()) data = pca_reduce(data, k);
  }
  return data;
}

/// Builds the problem (with sampled constant estimates) from raw samples.
inline SneProblem build_sne_pipeline(const Dataset& raw, const SnePipeline& cfg) {
  const Dataset data = preprocess(raw, cfg);
  const std::vector<double> sigma =
      cfg.sigma.empty() ? std::vector<double>{auto_sigma(data, cfg.perplexity)} : cfg.sigma;
  SneProblem problem = build_sne(data, sigma, cfg.embed_dim);
  problem.set_constants(estimate_sne_constants(problem, cfg.constants_seed));
  return problem;
}

/// Reads a CSV data file, mapping I/O and parse failures to DATA errors.
inline Dataset load_dataset(const std::string& path) {
  try {
    return load_matrix(path);
  } catch (const ParseError& e) {
    throw data_error(e.what());
  }
}

/// Gaussian blobs around `clusters` random centres; labels in `labels`.
inline Dataset gaussian_clusters(std::size_t n, std::size_t dim, std::size_t clusters,
                                 std::uint64_t seed, double separation,
                                 std::vector<std::size_t>* labels = nullptr) {
  if (clusters == 0 || n < clusters) throw ArgumentError("gaussian_clusters: need n >= clusters >= 1");
  SampleStream rng(seed);
  Eigen::MatrixXd centres(static_cast<Eigen::Index>(clusters), static_cast<Eigen::Index>(dim));
  for (Eigen::Index c = 0; c < centres.rows(); ++c)
    for (Eigen::Index l = 0; l < centres.cols(); ++l) centres(c, l) = separation * rng.normal();
  Dataset out;
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  if (labels) labels->assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t c = r % clusters;
    if (labels) (*labels)[r] = c;
    for (Eigen::Index l = 0; l < centres.cols(); ++l)
      out.values(static_cast<Eigen::Index>(r), l) =
          centres(static_cast<Eigen::Index>(c), l) + rng.normal();
  }
  return out;
}

/// Embedding coordinates as an n x embed_dim matrix.
inline Eigen::MatrixXd embedding_matrix(const SneProblem& p, const Point& y) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(p.points()),
                      static_cast<Eigen::Index>(p.embed_dim()));
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    out.row(r) = y.segment(r * out.cols(), out.cols()).transpose();
  return out;
}

/// Fraction of points whose nearest class centroid is their own class.
inline double nearest_centroid_accuracy(const Eigen::MatrixXd& points,
                                        const std::vector<std::size_t>& labels) {
  const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;
  Eigen::MatrixXd centroid = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes), points.cols());
  std::vector<double> count(classes, 0.0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    centroid.row(static_cast<Eigen::Index>(labels[r])) += points.row(static_cast<Eigen::Index>(r));
    count[labels[r]] += 1.0;
  }
  for (std::size_t c = 0; c < classes; ++c)
    if (count[c] > 0) centroid.row(static_cast<Eigen::Index>(c)) /= count[c];
  std::size_t hits = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    Eigen::Index best = 0;
    (centroid.rowwise() - points.row(static_cast<Eigen::Index>(r))).rowwise().squaredNorm().minCoeff(&best);
    if (static_cast<std::size_t>(best) == labels[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

/// Outer batch ceil(n^{2/3}) and inner samples ceil(m^{2/5}).
inline OptimizerConfig default_embed_config(std::size_t n) {
  OptimizerConfig c;
  c.variant = Algorithm::minibatch_v1;
  const double nn = static_cast<double>(n);
  c.batch_b = static_cast<std::size_t>(std::ceil(std::pow(nn, 2.0 / 3.0) - 1e-9));
  c.sample_a = c.sample_b = static_cast<std::size_t>(std::ceil(std::pow(nn, 0.4) - 1e-9));
  c.eta = 5e-4;
  c.epochs_s = 120;
  c.inner_k = 20;
  c.record_every = 20;
  return c;
}

/// Random initial embedding with i.i.d. N(0, scale^2) coordinates.
inline Point random_point(std::size_t dim, double scale, std::uint64_t seed) {
  SampleStream rng(seed);
  Point x(static_cast<Eigen::Index>(dim));
  for (Eigen::Index l = 0; l < x.size(); ++l) x[l] = scale * rng.normal();
  return x;
}

}  // namespace scvr::harness
