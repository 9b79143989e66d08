#include "frbmed/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "frbmed/error.hpp"
#include "frbmed/rng.hpp"

namespace frbmed {

double bisquare_rho(double x, double c) {
  const double ax = std::abs(x);
  if (ax > c) return c * c / 6.0;
  const double x2 = x * x;
  const double c2 = c * c;
  return x2 / 2.0 - x2 * x2 / (2.0 * c2) + x2 * x2 * x2 / (6.0 * c2 * c2);
}

double bisquare_psi(double x, double c) {
  if (std::abs(x) > c) return 0.0;
  const double u = 1.0 - (x / c) * (x / c);
  return x * u * u;
}

double bisquare_psi_prime(double x, double c) {
  if (std::abs(x) > c) return 0.0;
  const double u = (x / c) * (x / c);
  return (1.0 - u) * (1.0 - 5.0 * u);
}

double bisquare_weight(double x, double c) {
  if (std::abs(x) > c) return 0.0;
  const double u = 1.0 - (x / c) * (x / c);
  return u * u;
}

BisquareLoss::BisquareLoss(double tuning) : c(tuning) {
  if (!(tuning > 0.0)) fail(ErrorKind::InvalidArgument, "bisquare tuning constant must be > 0");
}

double normal_expected_rho(double c) {
  using boost::math::quadrature::gauss_kronrod;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
  auto integrand = [c, inv_sqrt_2pi](double z) {
    return bisquare_rho(z, c) * inv_sqrt_2pi * std::exp(-0.5 * z * z);
  };
  // Split at c so the kink is an endpoint; integrate the bounded tail too.
  const double inner = gauss_kronrod<double, 61>::integrate(integrand, 0.0, c, 15, 1e-15);
  const double tail = gauss_kronrod<double, 61>::integrate(
      integrand, c, std::numeric_limits<double>::infinity(), 15, 1e-15);
  return 2.0 * (inner + tail);
}

SScaleConfig::SScaleConfig(double tuning) : c_s(tuning) {
  if (!(tuning > 0.0)) fail(ErrorKind::InvalidArgument, "S-scale tuning constant must be > 0");
  delta = normal_expected_rho(tuning);
}

const char* to_string(FitMethod method) {
  switch (method) {
    case FitMethod::OLS: return "OLS";
    case FitMethod::S: return "S";
    case FitMethod::MM: return "MM";
    case FitMethod::Median: return "Median";
    case FitMethod::WLS: return "WLS";
    case FitMethod::Covariance: return "Covariance";
  }
  return "?";
}

namespace {

double mean_rho(const Vector& r, double s, double c) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) sum += bisquare_rho(r(i) / s, c);
  return sum / static_cast<double>(r.size());
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double hi = *mid;
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

double mad_scale(const Vector& r) {
  std::vector<double> v(r.data(), r.data() + r.size());
  const double med = median_of(v);
  for (auto& e : v) e = std::abs(e - med);
  return 1.482602218505602 * median_of(v);
}

void require_full_rank(const Matrix& x, const char* who) {
  if (x.rows() <= x.cols()) {
    fail(ErrorKind::RankDeficient, std::string("RankDeficient: ") + who + " needs n > p (n = " +
                                       std::to_string(x.rows()) + ", p = " +
                                       std::to_string(x.cols()) + ")");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < x.cols()) {
    fail(ErrorKind::RankDeficient, std::string("RankDeficient: design of ") + who +
                                       " has rank " + std::to_string(qr.rank()) + " < " +
                                       std::to_string(x.cols()));
  }
}

// Residuals this close to zero relative to the response are exact fits.
double zero_tolerance(const Vector& y) {
  const double big = y.size() ? y.cwiseAbs().maxCoeff() : 0.0;
  return 1e-11 * std::max(big, 1e-300);
}

void snap_zero(Vector& r, double tol) {
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (std::abs(r(i)) <= tol) r(i) = 0.0;
  }
}

Vector weights_for(const Vector& r, double scale, double c) {
  Vector w(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) w(i) = bisquare_weight(r(i) / scale, c);
  return w;
}

Matrix safe_inverse_gram(const Matrix& x, const Vector& w) {
  const Matrix gram = x.transpose() * w.asDiagonal() * x;
  Eigen::FullPivLU<Matrix> lu(gram);
  if (!lu.isInvertible()) return Matrix::Constant(x.cols(), x.cols(),
                                                  std::numeric_limits<double>::quiet_NaN());
  return lu.inverse();
}

}  // namespace

ScaleResult s_scale(const Vector& residuals, const SScaleConfig& cfg) {
  const auto n = residuals.size();
  if (n == 0) fail(ErrorKind::InvalidArgument, "s_scale: empty residual vector");
  const double c = cfg.c_s;
  const double delta = cfg.delta;
  const double rho_max = c * c / 6.0;

  Eigen::Index nonzero = 0;
  for (Eigen::Index i = 0; i < n; ++i) nonzero += residuals(i) != 0.0;
  ScaleResult out;
  if (static_cast<double>(nonzero) * rho_max <= static_cast<double>(n) * delta * (1.0 + 1e-12)) {
    out.degenerate = true;
    return out;
  }

  std::vector<double> abs_r(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) abs_r[static_cast<std::size_t>(i)] = std::abs(residuals(i));
  double s0 = median_of(abs_r) / 0.6744897501960817;
  if (!(s0 > 0.0)) s0 = residuals.cwiseAbs().sum() / static_cast<double>(nonzero);

  auto h = [&](double s) { return mean_rho(residuals, s, c) - delta; };
  double lo = s0, hi = s0;
  int expand = 0;
  while (h(lo) <= 0.0) {
    lo *= 0.5;
    if (++expand > 2000) fail(ErrorKind::NoConvergence, "NoConvergence: s_scale bracket (low)");
  }
  while (h(hi) >= 0.0) {
    hi *= 2.0;
    if (++expand > 4000) fail(ErrorKind::NoConvergence, "NoConvergence: s_scale bracket (high)");
  }
  std::uintmax_t max_iter = static_cast<std::uintmax_t>(std::max(cfg.max_iter, 50));
  auto [a, b] = boost::math::tools::toms748_solve(
      h, lo, hi, boost::math::tools::eps_tolerance<double>(50), max_iter);
  out.scale = 0.5 * (a + b);
  out.iterations = static_cast<int>(max_iter) + expand;
  if (std::abs(h(out.scale)) > cfg.tol) {
    fail(ErrorKind::NoConvergence, "NoConvergence: s_scale did not reach tolerance");
  }
  return out;
}

RegressionFit fit_ols(const Matrix& x, const Vector& y) {
  if (x.rows() < x.cols()) {
    fail(ErrorKind::RankDeficient, "RankDeficient: OLS needs n >= p");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < x.cols()) {
    fail(ErrorKind::RankDeficient, "RankDeficient: OLS design has rank " +
                                       std::to_string(qr.rank()) + " < " +
                                       std::to_string(x.cols()));
  }
  RegressionFit fit;
  fit.method = FitMethod::OLS;
  fit.coefficients = qr.solve(y);
  fit.residuals = y - x * fit.coefficients;
  fit.weights = Vector::Ones(y.size());
  const double df = static_cast<double>(x.rows() - x.cols());
  const double rss = fit.residuals.squaredNorm();
  fit.scale = df > 0 ? std::sqrt(rss / df) : 0.0;
  fit.covariance = fit.scale * fit.scale * safe_inverse_gram(x, fit.weights);
  return fit;
}

Vector fit_wls(const Matrix& x, const Vector& y, const Vector& w) {
  const auto p = x.cols();
  std::vector<Eigen::Index> rows;
  rows.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (w(i) < 0.0 || !std::isfinite(w(i))) {
      fail(ErrorKind::InvalidArgument, "fit_wls: weights must be finite and nonnegative");
    }
    if (w(i) > 0.0) rows.push_back(i);
  }
  if (static_cast<Eigen::Index>(rows.size()) < p) {
    fail(ErrorKind::SingularWeightedDesign,
         "SingularWeightedDesign: fewer positive weights than coefficients");
  }
  Matrix xs(static_cast<Eigen::Index>(rows.size()), p);
  Vector ys(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double sw = std::sqrt(w(rows[k]));
    xs.row(static_cast<Eigen::Index>(k)) = sw * x.row(rows[k]);
    ys(static_cast<Eigen::Index>(k)) = sw * y(rows[k]);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(xs);
  if (qr.rank() < p) {
    fail(ErrorKind::SingularWeightedDesign, "SingularWeightedDesign: weighted design has rank " +
                                                std::to_string(qr.rank()) + " < " +
                                                std::to_string(p));
  }
  return qr.solve(ys);
}

namespace {

struct Candidate {
  Vector beta;
  double scale = std::numeric_limits<double>::infinity();
  std::size_t index = 0;
  bool zero = false;
};

// One IRLS step of the S-estimator followed by one fixed-point step of the
// scale equation.
void s_refine_step(const Matrix& x, const Vector& y, const SScaleConfig& cfg, Candidate& cand) {
  Vector r = y - x * cand.beta;
  const Vector w = weights_for(r, cand.scale, cfg.c_s);
  cand.beta = fit_wls(x, y, w);
  r = y - x * cand.beta;
  cand.scale *= std::sqrt(mean_rho(r, cand.scale, cfg.c_s) / cfg.delta);
}

bool draw_elemental(const Matrix& x, const Vector& y, CounterRng& rng, Vector& beta) {
  const auto n = static_cast<std::uint64_t>(x.rows());
  const auto p = x.cols();
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(p));
  while (static_cast<Eigen::Index>(idx.size()) < p) {
    const auto i = static_cast<Eigen::Index>(rng.uniform_index(n));
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
  }
  Matrix xb(p, p);
  Vector yb(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    xb.row(k) = x.row(idx[static_cast<std::size_t>(k)]);
    yb(k) = y(idx[static_cast<std::size_t>(k)]);
  }
  Eigen::FullPivLU<Matrix> lu(xb);
  if (!lu.isInvertible()) return false;
  beta = lu.solve(yb);
  return beta.allFinite();
}

}  // namespace

RegressionFit fit_s_regression(const Matrix& x, const Vector& y, const SScaleConfig& cfg,
                               std::uint64_t seed) {
  require_full_rank(x, "S-regression");
  const double ztol = zero_tolerance(y);
  CounterRng rng(seed, 0);

  std::vector<Candidate> pool;
  pool.reserve(static_cast<std::size_t>(cfg.n_subsamples));
  for (int s = 0; s < cfg.n_subsamples; ++s) {
    Candidate cand;
    cand.index = static_cast<std::size_t>(s);
    bool ok = false;
    for (int attempt = 0; attempt < 50 && !ok; ++attempt) ok = draw_elemental(x, y, rng, cand.beta);
    if (!ok) continue;
    Vector r = y - x * cand.beta;
    snap_zero(r, ztol);
    const auto sc = s_scale(r, cfg);
    if (sc.degenerate) {
      cand.scale = 0.0;
      cand.zero = true;
      pool.push_back(std::move(cand));
      continue;
    }
    cand.scale = sc.scale;
    try {
      for (int k = 0; k < cfg.k_refine_steps; ++k) s_refine_step(x, y, cfg, cand);
    } catch (const Error&) {
      continue;
    }
    if (!std::isfinite(cand.scale)) continue;
    pool.push_back(std::move(cand));
  }
  if (pool.empty()) {
    fail(ErrorKind::AllSubsamplesSingular, "AllSubsamplesSingular: no usable elemental subsample");
  }

  std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
    if (a.scale != b.scale) return a.scale < b.scale;
    return a.index < b.index;
  });
  const std::size_t keep = std::min<std::size_t>(pool.size(),
                                                 static_cast<std::size_t>(std::max(cfg.best_candidates, 1)));

  RegressionFit best;
  best.method = FitMethod::S;
  best.scale = std::numeric_limits<double>::infinity();
  std::size_t best_index = 0;
  for (std::size_t c = 0; c < keep; ++c) {
    Candidate cand = pool[c];
    int iterations = 0;
    bool converged = true;
    if (!cand.zero) {
      converged = false;
      for (iterations = 1; iterations <= cfg.max_iter; ++iterations) {
        Vector r = y - x * cand.beta;
        Vector beta_new;
        try {
          beta_new = fit_wls(x, y, weights_for(r, cand.scale, cfg.c_s));
        } catch (const Error&) {
          break;
        }
        Vector r_new = y - x * beta_new;
        snap_zero(r_new, ztol);
        const auto sc = s_scale(r_new, cfg);
        const double change = (beta_new - cand.beta).cwiseAbs().maxCoeff();
        const double size = std::max(1.0, beta_new.cwiseAbs().maxCoeff());
        cand.beta = std::move(beta_new);
        if (sc.degenerate) {
          cand.scale = 0.0;
          cand.zero = true;
          converged = true;
          break;
        }
        cand.scale = sc.scale;
        if (change <= cfg.tol * size) {
          converged = true;
          break;
        }
      }
    }
    if (cand.scale < best.scale || (cand.scale == best.scale && cand.index < best_index)) {
      best.coefficients = cand.beta;
      best.scale = cand.scale;
      best.zero_scale = cand.zero;
      best.converged = converged;
      best.iterations = iterations;
      best_index = cand.index;
    }
  }

  best.residuals = y - x * best.coefficients;
  if (best.zero_scale) {
    best.weights.resize(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      best.weights(i) = std::abs(best.residuals(i)) <= ztol ? 1.0 : 0.0;
    }
  } else {
    best.weights = weights_for(best.residuals, best.scale, cfg.c_s);
  }
  return best;
}

RegressionFit fit_mm_regression(const Matrix& x, const Vector& y, const MMConfig& cfg,
                                std::uint64_t seed) {
  const BisquareLoss loss(cfg.c);
  RegressionFit s_fit = fit_s_regression(x, y, cfg.s, seed);

  RegressionFit fit;
  fit.method = FitMethod::MM;
  fit.scale = s_fit.scale;
  fit.coefficients = s_fit.coefficients;
  if (s_fit.zero_scale) {
    fit.zero_scale = true;
    fit.residuals = s_fit.residuals;
    fit.weights = s_fit.weights;
    fit.converged = true;
    fit.covariance = Matrix::Zero(x.cols(), x.cols());
    return fit;
  }

  const double sigma = fit.scale;
  auto objective = [&](const Vector& beta) {
    const Vector r = y - x * beta;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) sum += loss.rho(r(i) / sigma);
    return sum;
  };
  fit.objective_trace.push_back(objective(fit.coefficients));
  fit.converged = false;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Vector r = y - x * fit.coefficients;
    Vector beta_new = fit_wls(x, y, weights_for(r, sigma, loss.c));
    const double change = (beta_new - fit.coefficients).cwiseAbs().maxCoeff();
    const double size = std::max(1.0, fit.coefficients.cwiseAbs().maxCoeff());
    fit.coefficients = std::move(beta_new);
    fit.objective_trace.push_back(objective(fit.coefficients));
    fit.iterations = it;
    if (change <= cfg.tol * size) {
      fit.converged = true;
      break;
    }
  }
  fit.residuals = y - x * fit.coefficients;
  fit.weights = weights_for(fit.residuals, sigma, loss.c);

  const double wsum = fit.weights.sum();
  const double df = wsum - static_cast<double>(x.cols());
  double s2 = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    s2 += fit.weights(i) * fit.residuals(i) * fit.residuals(i);
  }
  s2 = df > 0 ? s2 / df : std::numeric_limits<double>::quiet_NaN();
  fit.covariance = s2 * safe_inverse_gram(x, fit.weights);
  return fit;
}

double l1_objective(const Matrix& x, const Vector& y, const Vector& beta) {
  return (y - x * beta).cwiseAbs().sum();
}

namespace {

// Basis of p observations with smallest |r| that gives an invertible X_B.
std::vector<Eigen::Index> initial_basis(const Matrix& x, const Vector& r) {
  const auto n = x.rows();
  const auto p = x.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(r(a)) < std::abs(r(b)); });
  std::vector<Eigen::Index> basis;
  for (Eigen::Index i : order) {
    basis.push_back(i);
    Matrix xb(static_cast<Eigen::Index>(basis.size()), p);
    for (std::size_t k = 0; k < basis.size(); ++k) xb.row(static_cast<Eigen::Index>(k)) = x.row(basis[k]);
    Eigen::FullPivLU<Matrix> lu(xb);
    if (lu.rank() < static_cast<Eigen::Index>(basis.size())) basis.pop_back();
    if (static_cast<Eigen::Index>(basis.size()) == p) break;
  }
  return basis;
}

// Minimizer over t of sum |r_i - t a_i|: a weighted median of r_i / a_i.
std::pair<double, Eigen::Index> weighted_median_step(const Vector& r, const Vector& a) {
  std::vector<std::pair<double, Eigen::Index>> pts;
  double total = 0.0;
  const double amax = a.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (std::abs(a(i)) > 1e-14 * amax) {
      pts.emplace_back(r(i) / a(i), i);
      total += std::abs(a(i));
    }
  }
  std::sort(pts.begin(), pts.end());
  double cum = 0.0;
  for (const auto& [t, i] : pts) {
    cum += std::abs(a(i));
    if (cum >= 0.5 * total) return {t, i};
  }
  return {0.0, -1};
}

}  // namespace

RegressionFit fit_median_regression(const Matrix& x, const Vector& y, const MedianConfig& cfg) {
  require_full_rank(x, "median regression");
  const auto p = x.cols();

  // Smoothed IRLS: weights 1 / max(|r|, eps_t) with a shrinking floor.
  Vector beta = fit_ols(x, y).coefficients;
  double obj = l1_objective(x, y, beta);
  double base = mad_scale(y - x * beta);
  if (!(base > 0.0)) base = std::max(y.cwiseAbs().maxCoeff(), 1.0);
  double eps = cfg.eps_start * base;
  int iterations = 0;
  for (int it = 0; it < cfg.irls_iterations; ++it) {
    ++iterations;
    const Vector r = y - x * beta;
    Vector w(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) w(i) = 1.0 / std::max(std::abs(r(i)), eps);
    Vector target;
    try {
      target = fit_wls(x, y, w);
    } catch (const Error&) {
      break;
    }
    // Damped step: halve until the L1 objective does not increase.
    double step = 1.0;
    Vector trial = target;
    double trial_obj = l1_objective(x, y, trial);
    while (trial_obj > obj && step > 1e-6) {
      step *= 0.5;
      trial = beta + step * (target - beta);
      trial_obj = l1_objective(x, y, trial);
    }
    if (trial_obj <= obj) {
      beta = trial;
      obj = trial_obj;
    }
    eps = std::max(eps * 0.5, cfg.eps_min * base);
  }

  // Vertex descent: move between elemental fits along improving edges.
  std::vector<Eigen::Index> basis = initial_basis(x, y - x * beta);
  if (static_cast<Eigen::Index>(basis.size()) < p) {
    fail(ErrorKind::RankDeficient, "RankDeficient: no invertible elemental basis");
  }
  bool converged = false;
  Vector vertex_beta;
  for (int step = 0; step < cfg.max_vertex_steps; ++step) {
    Matrix xb(p, p);
    Vector yb(p);
    for (Eigen::Index k = 0; k < p; ++k) {
      xb.row(k) = x.row(basis[static_cast<std::size_t>(k)]);
      yb(k) = y(basis[static_cast<std::size_t>(k)]);
    }
    Eigen::FullPivLU<Matrix> lu(xb);
    if (!lu.isInvertible()) fail(ErrorKind::NumericFailure, "median regression: singular basis");
    vertex_beta = lu.solve(yb);
    const Matrix xb_inv = lu.inverse();
    const Vector r = y - x * vertex_beta;
    const double f = r.cwiseAbs().sum();

    double best_f = f - 1e-13 * (1.0 + f);
    Eigen::Index best_j = -1, best_i = -1;
    for (Eigen::Index j = 0; j < p; ++j) {
      const Vector a = x * xb_inv.col(j);
      auto [t, i] = weighted_median_step(r, a);
      if (i < 0 || t == 0.0) continue;
      const double ft = (r - t * a).cwiseAbs().sum();
      if (ft < best_f) {
        best_f = ft;
        best_j = j;
        best_i = i;
      }
    }
    if (best_j < 0) {
      converged = true;
      break;
    }
    basis[static_cast<std::size_t>(best_j)] = best_i;
    iterations++;
  }
  if (!converged) fail(ErrorKind::NoConvergence, "NoConvergence: median regression vertex descent");

  RegressionFit fit;
  fit.method = FitMethod::Median;
  fit.coefficients = vertex_beta;
  fit.residuals = y - x * vertex_beta;
  fit.weights = Vector::Ones(y.size());
  fit.scale = mad_scale(fit.residuals);
  fit.converged = converged;
  fit.iterations = iterations;
  const double tau = fit.scale * std::sqrt(M_PI / 2.0);
  fit.covariance = tau * tau * safe_inverse_gram(x, fit.weights);
  return fit;
}

}  // namespace frbmed
