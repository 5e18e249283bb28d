#pragma once

// Fast invariant suite behind `scvr verify`.

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "scvr/estimators.hpp"
#include "scvr/harness/embed.hpp"
#include "scvr/optimizers.hpp"
#include "scvr/problems/sne.hpp"
#include "scvr/problems/synthetic.hpp"
#include "scvr/theory.hpp"
#include "scvr/verification.hpp"

namespace scvr::harness {

/// Deliberate faults for exercising the suite itself.
enum class Fault {
  none,
  inner_charge,  // inner estimator charges A instead of 2A
};

struct InvariantResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

/// estimate_inner with the snapshot evaluations left uncharged.
template <CompositionProblem P>
InnerValue faulty_estimate_inner(const P& p, const Point& x, const EpochSnapshot& snap,
                                 const IndexBatch& batch, QueryLedger& ledger) {
  InnerValue acc = InnerValue::Zero(snap.g_tilde.size());
  for (std::size_t j : batch) acc += query_inner(p, j, x, ledger) - p.inner_component(j, snap.x_tilde);
  return acc / static_cast<double>(batch.size()) + snap.g_tilde;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

inline Point seeded_point(std::size_t dim, std::uint64_t seed, double scale = 1.0) {
  return random_point(dim, scale, seed);
}

}  // namespace detail

inline std::vector<InvariantResult> run_invariant_suite(Fault fault = Fault::none) {
  std::vector<InvariantResult> out;
  const auto check = [&](const std::string& name, const std::function<std::string()>& body) {
    InvariantResult r{name, false, ""};
    try {
      r.detail = body();
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(r);
  };

  const auto affine = AffineQuadraticProblem::random({5, 4, 4, 3, 21, 1.0});
  const auto curved = CurvedInnerProblem::random({4, 4, 3, 2, 22, 1.0}, 0.5);
  const Point xa = detail::seeded_point(affine.input_dim(), 31);
  const Point xt = detail::seeded_point(affine.input_dim(), 32);
  const Point xc = detail::seeded_point(curved.input_dim(), 33);
  const Point xct = detail::seeded_point(curved.input_dim(), 34);

  check("snapshot identity", [&] {
    QueryLedger l;
    const EpochSnapshot snap = make_snapshot(curved, xct, l);
    SampleStream rng(5);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const IndexBatch a = sample_indices(rng, curved.inner_count(), 3);
      const IndexBatch b = sample_indices(rng, curved.inner_count(), 2);
      const IndexBatch o = sample_indices(rng, curved.outer_count(), 3);
      const InnerValue g = estimate_inner(curved, xct, snap, a, l);
      const InnerJacobian jh = estimate_inner_jacobian(curved, xct, snap, b, l);
      const std::size_t i = rng.uniform_index(curved.outer_count());
      const std::size_t j = rng.uniform_index(curved.inner_count());
      for (const Point& d : {grad_scvr1(curved, xct, snap, g, i, j, l).direction,
                             grad_scvr2(curved, snap, g, jh, i, l).direction,
                             grad_minibatch_v1(curved, snap, g, jh, o, l).direction,
                             grad_minibatch_v2(curved, xct, snap, g, b, o, l).direction})
        worst = std::max(worst, (d - snap.grad_tilde).cwiseAbs().maxCoeff());
    }
    return worst <= 1e-12 ? "" : "max deviation " + detail::fmt(worst);
  });

  check("inner estimators unbiased", [&] {
    QueryLedger l;
    const EpochSnapshot snap = make_snapshot(curved, xct, l);
    const double e1 = (exhaustive_inner_mean(curved, xc, snap, 2) - inner_full(curved, xc, l))
                          .cwiseAbs()
                          .maxCoeff();
    const double e2 =
        (exhaustive_jacobian_mean(curved, xc, snap, 2) - inner_jacobian_full(curved, xc, l))
            .cwiseAbs()
            .maxCoeff();
    return std::max(e1, e2) <= 1e-12 ? "" : "deviation " + detail::fmt(std::max(e1, e2));
  });

  check("scvr1 conditional mean", [&] {
    QueryLedger l;
    const EpochSnapshot snap = make_snapshot(curved, xct, l);
    const IndexBatch a{0, 2};
    const InnerValue g = estimate_inner(curved, xc, snap, a, l);
    const Point expect =
        inner_jacobian_full(curved, xc, l).transpose() * outer_gradient_full(curved, g, l);
    const double e =
        (exhaustive_grad_mean(curved, xc, snap, g, EstimatorKind::scvr1) - expect).cwiseAbs().maxCoeff();
    return e <= 1e-12 ? "" : "deviation " + detail::fmt(e);
  });

  check("estimator query charges", [&] {
    QueryLedger setup;
    const EpochSnapshot snap = make_snapshot(affine, xt, setup);
    const IndexBatch a{0, 1, 1};
    const IndexBatch o{0, 4};
    std::string err;
    QueryLedger l;
    const InnerValue g = fault == Fault::inner_charge
                             ? detail::faulty_estimate_inner(affine, xa, snap, a, l)
                             : estimate_inner(affine, xa, snap, a, l);
    if (l.total() != 2 * a.size()) err += "estimate_inner charged " + std::to_string(l.total()) + "; ";
    l = {};
    const InnerJacobian jh = estimate_inner_jacobian(affine, xa, snap, a, l);
    if (l.total() != 2 * a.size()) err += "estimate_inner_jacobian; ";
    if (grad_scvr1(affine, xa, snap, g, 1, 2, l).queries_charged != 4) err += "grad_scvr1; ";
    if (grad_scvr2(affine, snap, g, jh, 1, l).queries_charged != 2) err += "grad_scvr2; ";
    if (grad_minibatch_v1(affine, snap, g, jh, o, l).queries_charged != 2 * o.size())
      err += "grad_minibatch_v1; ";
    if (grad_minibatch_v2(affine, xa, snap, g, a, o, l).queries_charged != 2 * a.size() + 2 * o.size())
      err += "grad_minibatch_v2; ";
    return err;
  });

  check("optimizer query totals", [&] {
    std::string err;
    const std::size_t n = affine.outer_count(), m = affine.inner_count();
    for (Algorithm alg : {Algorithm::scvr1, Algorithm::scvr2, Algorithm::minibatch_v1,
                          Algorithm::minibatch_v2, Algorithm::svrg, Algorithm::sgd, Algorithm::gd}) {
      OptimizerConfig c;
      c.variant = alg;
      c.eta = 0.01;
      c.epochs_s = 2;
      c.inner_k = 3;
      c.sample_a = 2;
      c.sample_b = 3;
      c.batch_b = 2;
      const OptResult r = run(affine, c, xa);
      const std::uint64_t s = c.epochs_s, k = c.inner_k, a = c.sample_a, b = c.sample_b,
                          bb = c.batch_b;
      std::uint64_t expect = 0;
      switch (alg) {
        case Algorithm::scvr1: expect = s * (2 * m + n + k * (2 * a + 4)); break;
        case Algorithm::scvr2: expect = s * (2 * m + n + k * (2 * a + 2 * b + 2)); break;
        case Algorithm::minibatch_v1:
        case Algorithm::minibatch_v2: expect = s * (2 * m + n + k * (2 * a + 2 * b + 2 * bb)); break;
        case Algorithm::svrg: expect = s * (2 * m + n + k * (2 * m + 2)); break;
        case Algorithm::sgd: expect = s * k * (m + 2); break;
        case Algorithm::gd: expect = s * k * (2 * m + n); break;
      }
      if (r.ledger.total() != expect)
        err += std::string(to_string(alg)) + " " + std::to_string(r.ledger.total()) +
               " != " + std::to_string(expect) + "; ";
    }
    return err;
  });

  check("inner second-moment bounds", [&] {
    std::string err;
    const auto fixture = AffineQuadraticProblem::random({3, 6, 4, 3, 41, 1.0});
    const auto curved_fx = CurvedInnerProblem::random({3, 6, 3, 2, 42, 1.0}, 0.5);
    QueryLedger l;
    const Point x0 = detail::seeded_point(fixture.input_dim(), 43);
    const Point x1 = detail::seeded_point(fixture.input_dim(), 44);
    const EpochSnapshot snap = make_snapshot(fixture, x1, l);
    const Point y0 = detail::seeded_point(curved_fx.input_dim(), 45);
    const Point y1 = detail::seeded_point(curved_fx.input_dim(), 46);
    const EpochSnapshot csnap = make_snapshot(curved_fx, y1, l);
    const double bg = fixture.constants().b_g, lg = curved_fx.constants().l_g;
    for (std::size_t a : {1, 2, 4}) {
      const double lhs = inner_second_moment(fixture, x0, snap, a, Centering::snapshot);
      const double rhs = bg * bg / static_cast<double>(a) * (x0 - x1).squaredNorm();
      if (!(lhs < rhs)) err += "value A=" + std::to_string(a) + "; ";
      const double jl = jacobian_second_moment(curved_fx, y0, csnap, a, Centering::snapshot);
      const double jr = lg * lg / static_cast<double>(a) * (y0 - y1).squaredNorm();
      if (!(jl < jr)) err += "jacobian B=" + std::to_string(a) + "; ";
    }
    return err;
  });

  check("recursion closed form", [&] {
    SmoothnessConstants ones{1, 1, 1, 1, 1, false};
    TheoryParams p;
    p.h = p.d = 1.0;
    p.eta = 0.01;
    p.sample_a = p.sample_b = 1;
    double worst = 0.0;
    for (const auto& d : {recursion_scvr1(p, ones, 50), recursion_scvr2(p, ones, 50),
                          recursion_minibatch(p, ones, 50, 4)})
      worst = std::max(worst, std::abs(d.c0 - d.c0_closed) / d.c0_closed);
    return worst <= 1e-10 ? "" : "relative gap " + detail::fmt(worst);
  });

  check("suggested parameters satisfy premises", [&] {
    std::string err;
    SmoothnessConstants ones{1, 1, 1, 1, 1, false};
    for (std::size_t n : {100, 1000, 10000}) {
      const std::size_t b = static_cast<std::size_t>(std::ceil(std::pow(n, 2.0 / 3.0) - 1e-9));
      for (auto alg : {TheoryAlgorithm::scvr1, TheoryAlgorithm::scvr2, TheoryAlgorithm::minibatch}) {
        const TheoryParams t = suggest_parameters(n, n, ones, alg, b);
        if (!recursion_for(alg, t, ones).premise_holds)
          err += std::string(to_string(alg)) + " n=" + std::to_string(n) + "; ";
      }
    }
    return err;
  });

  check("gradients match finite differences", [&] {
    std::string err;
    QueryLedger l;
    const double ea = relative_error(full_gradient(affine, xa, l), fd_gradient(affine, xa));
    if (!(ea <= 1e-7)) err += "affine " + detail::fmt(ea) + "; ";
    const auto clusters = gaussian_clusters(6, 4, 2, 51, 3.0);
    const SneProblem sne = build_sne(clusters, 1.5, 2);
    const Point y = detail::seeded_point(sne.input_dim(), 52);
    const double es = relative_error(full_gradient(sne, y, l), fd_gradient(sne, y));
    if (!(es <= 1e-5)) err += "sne " + detail::fmt(es) + "; ";
    return err;
  });

  check("seeded runs deterministic", [&] {
    OptimizerConfig c;
    c.variant = Algorithm::minibatch_v1;
    c.eta = 0.05;
    c.epochs_s = 2;
    c.inner_k = 5;
    c.sample_a = c.sample_b = c.batch_b = 2;
    c.seed = 9;
    const OptResult r1 = run(curved, c, xc);
    const OptResult r2 = run(curved, c, xc);
    const bool same = r1.x_out == r2.x_out && r1.x_last == r2.x_last &&
                      r1.trace.size() == r2.trace.size() && r1.ledger == r2.ledger;
    return same ? "" : "runs differ";
  });

  return out;
}

}  // namespace scvr::harness
