#include "regnet/verify.hpp"

#include <algorithm>
#include <cmath>

#include "regnet/autodiff.hpp"
#include "regnet/encoder.hpp"
#include "regnet/episodes.hpp"
#include "regnet/heads.hpp"
#include "regnet/trainer.hpp"

namespace regnet {
namespace {

constexpr std::size_t kEmbedDim = 16;

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double top_eigenvalue(const Tensor& a) {
  Tensor v(a.rows(), 1, 1.0);
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    Tensor w = matmul(a, v);
    const double norm = l2_norm(w);
    if (norm == 0.0) return 0.0;
    v = w * (1.0 / norm);
    lambda = norm;
  }
  return lambda;
}

// min_a ||e - S a||^2 + lambda ||a||^2 by gradient descent with step 1/L.
double iterative_ridge_distance(const Tensor& e, const Tensor& s, double lambda) {
  const Tensor gram = matmul_tn(s, s);
  const Tensor ste = matmul_tn(s, e);
  const double step = 1.0 / (1.01 * top_eigenvalue(gram) + lambda);
  Tensor a(s.cols(), 1);
  const double stop = 1e-15 * (l2_norm(ste) + 1.0);
  for (int it = 0; it < 1000000; ++it) {
    Tensor grad = matmul(gram, a) - ste + a * lambda;
    if (l2_norm(grad) <= stop) break;
    a -= grad * step;
  }
  return l2_norm(e - matmul(s, a));
}

// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
std::vector<double> symmetric_eigenvalues(Tensor a) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a(i, i);
  return out;
}

double distance(const Tensor& e, const Tensor& s, double lambda1) {
  Tape tape;
  const ClassSubspace sub = build_subspace(tape.constant(s), lambda1);
  return regression_distance(tape.constant(e), sub).value().item();
}

CheckResult check_closed_form(const CheckOptions& o) {
  CheckResult r{"closed-form distance vs iterative minimizer", true, o.distance_trials, 0.0, 1e-6};
  Rng rng(derive_seed(o.seed, "check-distance"));
  const std::size_t shots[] = {1, 2, 5};
  for (std::size_t t = 0; t < o.distance_trials; ++t) {
    const std::size_t k = shots[t % 3];
    const double lambda = (t / 3) % 2 == 0 ? 0.0 : 1e-3;
    const Tensor s = Tensor::random_normal(kEmbedDim, k, rng);
    const Tensor e = Tensor::random_normal(kEmbedDim, 1, rng);
    const double closed = distance(e, s, lambda);
    const double iterative = iterative_ridge_distance(e, s, lambda);
    r.worst = std::max(r.worst, std::abs(closed - iterative) / iterative);
  }
  r.passed = r.worst < r.tolerance;
  return r;
}

std::vector<CheckResult> check_projector_laws(const CheckOptions& o) {
  CheckResult sym{"projector symmetry", true, o.law_trials, 0.0, 1e-10};
  CheckResult idem{"projector idempotence (lambda1 = 0)", true, o.law_trials, 0.0, 1e-8};
  CheckResult spec{"projector spectrum in [0, 1]", true, o.law_trials, 0.0, 1e-10};
  CheckResult inv{"distance invariance under S -> S R", true, o.law_trials, 0.0, 1e-8};
  Rng rng(derive_seed(o.seed, "check-laws"));
  for (std::size_t t = 0; t < o.law_trials; ++t) {
    const std::size_t k = 1 + t % 5;
    const double lambda = t % 2 == 0 ? 0.0 : 1e-3;
    const Tensor s = Tensor::random_normal(kEmbedDim, k, rng);
    Tape tape;
    const Tensor p = build_subspace(tape.constant(s), lambda).projector.value();
    const double pn = frobenius_norm(p);
    sym.worst = std::max(sym.worst, frobenius_norm(p - transpose(p)) / pn);
    if (lambda == 0.0) {
      idem.worst = std::max(idem.worst, frobenius_norm(matmul(p, p) - p) / pn);
    }
    for (double ev : symmetric_eigenvalues(p)) {
      spec.worst = std::max({spec.worst, -ev, ev - 1.0});
    }
    // Diagonal boost keeps R comfortably invertible.
    Tensor rmat = Tensor::random_normal(k, k, rng) + Tensor::identity(k) * 3.0;
    const Tensor e = Tensor::random_normal(kEmbedDim, 1, rng);
    const double d0 = distance(e, s, 0.0);
    const double d1 = distance(e, matmul(s, rmat), 0.0);
    inv.worst = std::max(inv.worst, std::abs(d0 - d1) / d0);
  }
  for (auto* c : {&sym, &idem, &spec, &inv}) c->passed = c->worst <= c->tolerance;
  return {sym, idem, spec, inv};
}

CheckResult check_posterior(const CheckOptions& o) {
  CheckResult r{"posterior normalization, symmetry and argmax", true, o.law_trials, 0.0, 1e-12};
  Rng rng(derive_seed(o.seed, "check-posterior"));
  for (std::size_t t = 0; t < o.law_trials; ++t) {
    const std::size_t n = 2 + t % 4;
    const std::size_t k = 1 + t % 3;
    Tape tape;
    std::vector<ClassSubspace> subs;
    for (std::size_t c = 0; c < n; ++c) {
      subs.push_back(build_subspace(tape.constant(Tensor::random_normal(kEmbedDim, k, rng)), 1e-3, c));
    }
    const Var e = tape.constant(Tensor::random_normal(kEmbedDim, 1, rng));
    const Tensor p = posterior(e, subs).value();
    r.worst = std::max(r.worst, std::abs(sum(p) - 1.0));
    std::size_t best_p = 0, best_d = 0;
    double dmin = regression_distance(e, subs[0]).value().item();
    for (std::size_t c = 1; c < n; ++c) {
      if (p[c] > p[best_p]) best_p = c;
      const double d = regression_distance(e, subs[c]).value().item();
      if (d < dmin) {
        dmin = d;
        best_d = c;
      }
    }
    if (best_p != best_d) r.passed = false;

    // Identical subspaces give identical distances and a uniform posterior.
    std::vector<ClassSubspace> same(n, subs[0]);
    const Tensor u = posterior(e, same).value();
    for (std::size_t c = 0; c < n; ++c) {
      r.worst = std::max(r.worst, std::abs(u[c] - 1.0 / static_cast<double>(n)));
    }
  }
  r.passed = r.passed && r.worst <= r.tolerance;
  return r;
}

CheckResult check_gradients(const CheckOptions& o) {
  CheckResult r{"loss gradient vs central finite differences", true, o.gradient_trials, 0.0, 1e-4};
  constexpr double h = 1e-4;
  for (std::size_t t = 0; t < o.gradient_trials; ++t) {
    const std::uint64_t seed = derive_seed(o.seed, t);
    SynthSpec spec;
    spec.seed = seed;
    spec.n_classes = 3;
    spec.per_class = 6;
    spec.dim = 5;
    spec.within_std = 0.3;
    const Dataset data = synth_gaussian(spec);
    Rng rng(derive_seed(seed, "episode"));
    const Episode ep = sample_episode(data, 2, 2, 2, rng);
    const EncoderParams params =
        init_encoder(derive_seed(seed, "init"), mlp_spec(5, {6}, 4, Activation::kTanh));
    Hyper hyper;
    hyper.lambda1 = 1e-3;
    hyper.lambda2 = 1e-2;
    hyper.n_way = 2;
    hyper.k_shot = 2;
    hyper.q_query = 2;
    const EpisodeGradient analytic = episode_gradient(params, ep, HeadKind::kRegression, hyper);

    EncoderParams probe = params;
    auto probe_tensors = probe.tensors();
    auto grad_tensors = analytic.grads.tensors();
    for (std::size_t i = 0; i < probe_tensors.size(); ++i) {
      for (std::size_t j = 0; j < probe_tensors[i]->size(); ++j) {
        double& x = (*probe_tensors[i])[j];
        const double saved = x;
        x = saved + h;
        const double up = episode_gradient(probe, ep, HeadKind::kRegression, hyper).loss;
        x = saved - h;
        const double down = episode_gradient(probe, ep, HeadKind::kRegression, hyper).loss;
        x = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double exact = (*grad_tensors[i])[j];
        const double scale = std::max({std::abs(numeric), std::abs(exact), 1e-4});
        r.worst = std::max(r.worst, std::abs(numeric - exact) / scale);
      }
    }
  }
  r.passed = r.worst < r.tolerance;
  return r;
}

}  // namespace

std::vector<CheckResult> run_checks(const CheckOptions& options) {
  std::vector<CheckResult> out;
  out.push_back(check_closed_form(options));
  for (auto& c : check_projector_laws(options)) out.push_back(std::move(c));
  out.push_back(check_posterior(options));
  out.push_back(check_gradients(options));
  return out;
}

}  // namespace regnet
