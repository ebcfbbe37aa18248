#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "plateau/cli/harness.hpp"
#include "plateau/cone_calculus.hpp"
#include "plateau/parallel.hpp"

namespace plateau::cli {

namespace {

constexpr std::size_t kBlock = 4096;

struct ConeBlock {
  std::int64_t quad = 0;
  std::int64_t neg = 0;
  double worst_quad = std::numeric_limits<double>::infinity();
  double worst_neg = std::numeric_limits<double>::infinity();
};

}  // namespace

ConeCheckReport verify_cone(int n, int k, std::int64_t samples, std::uint64_t seed, int workers) {
  const std::size_t total = static_cast<std::size_t>(samples);
  const std::size_t blocks = (total + kBlock - 1) / kBlock;
  std::vector<ConeBlock> partial(blocks);
  parallel_blocks(blocks, workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t b = lo; b < hi; ++b) {
      const std::size_t first = b * kBlock;
      const std::size_t count = std::min(kBlock, total - first);
      ConeBlock& out = partial[b];
      for (const auto& kappa : cone::sample_cone_range(n, k, first, count, seed)) {
        const double quad_scale = 1.0 + std::abs(cone::elementary_symmetric(kappa, 1) *
                                                 cone::elementary_symmetric(kappa, k));
        const double q = cone::lemma_quadratic_slack(kappa, k) / quad_scale;
        out.worst_quad = std::min(out.worst_quad, q);
        if (q < -1e-10) ++out.quad;
        const double neg = cone::lemma_negative_part_slack(kappa, k);
        if (std::isfinite(neg)) {
          out.worst_neg = std::min(out.worst_neg, neg);
          if (neg < -1e-12) ++out.neg;
        }
      }
    }
  });
  ConeCheckReport r;
  r.n = n;
  r.k = k;
  r.samples = samples;
  r.worst_quadratic = std::numeric_limits<double>::infinity();
  r.worst_negative_part = std::numeric_limits<double>::infinity();
  for (const auto& b : partial) {
    r.quadratic_violations += b.quad;
    r.negative_part_violations += b.neg;
    r.worst_quadratic = std::min(r.worst_quadratic, b.worst_quad);
    r.worst_negative_part = std::min(r.worst_negative_part, b.worst_neg);
  }
  return r;
}

RenWangCheckReport renwang_check(int n, double eps_rw, std::int64_t samples, int spot_checks,
                                 int xi_per_check, std::uint64_t seed, int workers) {
  const auto spectra = cone::sample_cone(n, n - 1, static_cast<std::size_t>(samples), seed, 1.0);
  const std::size_t m = spectra.size();
  std::vector<double> min_k(m);
  parallel_blocks(m, workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) min_k[i] = cone::ren_wang_min_K(spectra[i], eps_rw);
  });
  RenWangCheckReport r;
  r.n = n;
  r.samples = samples;
  r.max_K = 0.0;
  for (double v : min_k) {
    if (!std::isfinite(v))
      ++r.non_finite;
    else
      r.max_K = std::max(r.max_K, v);
  }
  std::vector<double> sorted = min_k;
  std::sort(sorted.begin(), sorted.end());
  r.median_K = sorted[m / 2];

  const std::size_t checks = std::min<std::size_t>(static_cast<std::size_t>(spot_checks), m);
  std::vector<std::int64_t> negatives(checks, 0);
  std::vector<double> worst(checks, std::numeric_limits<double>::infinity());
  parallel_blocks(checks, workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      const std::size_t idx = c * m / checks;
      const cone::RWQuery q = cone::ren_wang_form(spectra[idx], eps_rw, r.max_K);
      std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + idx + 1);
      std::normal_distribution<double> normal;
      Eigen::VectorXd xi(n);
      for (int t = 0; t < xi_per_check; ++t) {
        for (int d = 0; d < n; ++d) xi[d] = normal(rng);
        xi.normalize();
        const double v = q.evaluate(xi) / q.scale();
        worst[c] = std::min(worst[c], v);
        if (v < -1e-9) ++negatives[c];
      }
    }
  });
  r.spot_checks = static_cast<int>(checks);
  r.xi_evaluated = static_cast<std::int64_t>(checks) * xi_per_check;
  r.worst_value = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < checks; ++c) {
    r.negative_values += negatives[c];
    r.worst_value = std::min(r.worst_value, worst[c]);
  }
  return r;
}

}  // namespace plateau::cli
