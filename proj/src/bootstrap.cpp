#include "frbmed/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "frbmed/distributions.hpp"
#include "frbmed/error.hpp"
#include "frbmed/parallel.hpp"
#include "frbmed/rng.hpp"

namespace frbmed {

namespace {

constexpr unsigned kMaxAttempts = 10;
constexpr std::uint64_t kResampleDomain = 0x5245534D504C4531ULL;

bool is_replicate_failure(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RankDeficient:
    case ErrorKind::SingularWeightedDesign:
    case ErrorKind::AllSubsamplesSingular:
    case ErrorKind::SingularCovariance:
    case ErrorKind::DegenerateMoments:
    case ErrorKind::NoConvergence:
    case ErrorKind::NumericFailure:
    case ErrorKind::TooFewRows:
      return true;
    default:
      return false;
  }
}

unsigned resolve_threads(unsigned threads) {
  return threads == 0 ? default_thread_count() : threads;
}

}  // namespace

const char* to_string(CiType type) {
  return type == CiType::BCa ? "bca" : "perc";
}

const char* to_string(ContrastMode mode) {
  switch (mode) {
    case ContrastMode::None: return "none";
    case ContrastMode::Estimates: return "estimates";
    case ContrastMode::Absolute: return "absolute";
  }
  return "?";
}

CiType ci_type_from_string(const std::string& text) {
  if (text == "bca") return CiType::BCa;
  if (text == "perc" || text == "percentile") return CiType::Percentile;
  fail(ErrorKind::InvalidArgument, "unknown interval type '" + text + "' (bca, perc)");
}

ContrastMode contrast_mode_from_string(const std::string& text) {
  if (text == "none" || text == "false") return ContrastMode::None;
  if (text == "estimates") return ContrastMode::Estimates;
  if (text == "absolute") return ContrastMode::Absolute;
  fail(ErrorKind::InvalidArgument,
       "unknown contrast mode '" + text + "' (none, estimates, absolute)");
}

void validate(const BootstrapConfig& cfg) {
  if (cfg.R < 2) fail(ErrorKind::InvalidArgument, "InvalidArgument: R must be at least 2");
  if (!(cfg.level > 0.5 && cfg.level < 1.0)) {
    fail(ErrorKind::InvalidArgument, "InvalidArgument: level must lie in (0.5, 1)");
  }
}

std::vector<std::size_t> replicate_indices(std::size_t n, std::uint64_t seed, std::size_t r,
                                           unsigned attempt) {
  if (n < 2) fail(ErrorKind::TooFewRows, "TooFewRows: resampling needs n >= 2");
  CounterRng rng(derive_seed(seed ^ kResampleDomain, r), attempt);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_index(n));
  return idx;
}

std::vector<std::vector<std::size_t>> resample_indices(std::size_t n, std::size_t R,
                                                       std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> out(R);
  for (std::size_t r = 0; r < R; ++r) out[r] = replicate_indices(n, seed, r);
  return out;
}

// ---------------------------------------------------------------------------
// Fast and robust bootstrap

FrbPrecompute frb_precompute(const Matrix& x, const RegressionFit& fit, double tuning) {
  FrbPrecompute pre;
  pre.coefficients = fit.coefficients;
  pre.scale = fit.scale;
  pre.weights = fit.weights;
  pre.tuning = tuning;
  const auto p = x.cols();
  if (!(fit.scale > 0.0)) {
    pre.correction = Matrix::Identity(p, p);
    return pre;
  }
  Matrix hess = Matrix::Zero(p, p);
  Matrix wgram = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double u = fit.residuals(i) / fit.scale;
    const auto xi = x.row(i).transpose();
    hess.noalias() += bisquare_psi_prime(u, tuning) * xi * xi.transpose();
    wgram.noalias() += fit.weights(i) * xi * xi.transpose();
  }
  Eigen::FullPivLU<Matrix> lu(hess);
  if (!lu.isInvertible()) {
    fail(ErrorKind::NumericFailure,
         "NumericFailure: derivative matrix of the MM estimating equations is singular");
  }
  pre.correction = lu.solve(wgram);
  if (!pre.correction.allFinite()) {
    fail(ErrorKind::NumericFailure, "NumericFailure: correction matrix is not finite");
  }
  return pre;
}

Vector frb_replicate(const Matrix& x, const Vector& y, const std::vector<std::size_t>& idx,
                     const FrbPrecompute& pre) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Matrix xs(n, x.cols());
  Vector ys(n);
  Vector ws(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]);
    xs.row(r) = x.row(src);
    ys(r) = y(src);
    ws(r) = pre.weights(src);
  }
  const Vector wls = fit_wls(xs, ys, ws);
  return pre.coefficients + pre.correction * (wls - pre.coefficients);
}

// ---------------------------------------------------------------------------
// Intervals

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) fail(ErrorKind::InvalidArgument, "quantile of an empty sample");
  p = std::clamp(p, 0.0, 1.0);
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

std::vector<double> sorted_copy(const std::vector<double>& v) {
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  return s;
}

bool all_equal(const std::vector<double>& sorted) {
  return sorted.front() == sorted.back();
}

Interval percentile_from_sorted(const std::vector<double>& sorted, double level) {
  if (all_equal(sorted)) return {sorted.front(), sorted.front(), true};
  const double alpha = 1.0 - level;
  return {quantile_sorted(sorted, alpha / 2.0), quantile_sorted(sorted, 1.0 - alpha / 2.0),
          false};
}

Interval bca_from_sorted(const std::vector<double>& sorted, double theta_hat, double accel,
                         double level, BcaDetail* detail) {
  if (all_equal(sorted)) return {sorted.front(), sorted.front(), true};
  const double R = static_cast<double>(sorted.size());
  const auto lower = std::lower_bound(sorted.begin(), sorted.end(), theta_hat);
  const auto upper = std::upper_bound(sorted.begin(), sorted.end(), theta_hat);
  double count = static_cast<double>(lower - sorted.begin()) +
                 0.5 * static_cast<double>(upper - lower);
  count = std::clamp(count, 1.0, R - 1.0);
  const double z0 = normal_quantile(count / R);
  const double alpha = 1.0 - level;
  auto adjust = [&](double q) {
    const double zq = normal_quantile(q);
    const double s = z0 + zq;
    return normal_cdf(z0 + s / (1.0 - accel * s));
  };
  const double a1 = adjust(alpha / 2.0);
  const double a2 = adjust(1.0 - alpha / 2.0);
  if (detail) *detail = {z0, a1, a2};
  return {quantile_sorted(sorted, a1), quantile_sorted(sorted, a2), false};
}

}  // namespace

Interval percentile_interval(const std::vector<double>& replicates, double level) {
  return percentile_from_sorted(sorted_copy(replicates), level);
}

Interval bca_interval(const std::vector<double>& replicates, double theta_hat, double accel,
                      double level, BcaDetail* detail) {
  return bca_from_sorted(sorted_copy(replicates), theta_hat, accel, level, detail);
}

double jackknife_acceleration(const std::vector<double>& loo) {
  std::vector<double> v;
  for (double t : loo) {
    if (std::isfinite(t)) v.push_back(t);
  }
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s2 = 0.0;
  double s3 = 0.0;
  for (double t : v) {
    const double d = mean - t;
    s2 += d * d;
    s3 += d * d * d;
  }
  // Relative cutoff: differences at rounding level carry no skewness signal.
  if (s2 <= 1e-26 * std::max(1.0, mean * mean) * static_cast<double>(v.size())) return 0.0;
  return s3 / (6.0 * std::pow(s2, 1.5));
}

// ---------------------------------------------------------------------------
// Replicate evaluation

namespace {

Matrix xmy_from_fit(const MediationFit& fit) {
  const auto& outcome = fit.equations.back().design;
  Matrix z(outcome.x.rows(), 3);
  z.col(0) = outcome.x.col(2);
  z.col(1) = outcome.x.col(1);
  z.col(2) = outcome.y;
  return z;
}

std::vector<Vector> covariance_coefficients(const Matrix& z) {
  const auto c = mediation_from_covariance(ml_covariance(z));
  return {(Vector(2) << c.intercept_m, c.a).finished(),
          (Vector(3) << c.intercept_y, c.b, c.c).finished()};
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(idx[r]));
  }
  return out;
}

struct Refitter {
  const MediationFit& fit;
  const FitConfig& cfg;
  std::vector<FrbPrecompute> frb;
  Matrix xmy;

  Refitter(const MediationFit& f, const FitConfig& c) : fit(f), cfg(c) {
    if (fit.method == Method::RegressionMM) {
      for (const auto& eq : fit.equations) {
        frb.push_back(frb_precompute(eq.design.x, eq.fit, cfg.mm.c));
      }
    }
    if (is_covariance(fit.method)) xmy = xmy_from_fit(fit);
  }

  // Bootstrap replicate: FRB for MM, a full refit otherwise.
  std::vector<Vector> replicate(const std::vector<std::size_t>& idx) const {
    if (is_covariance(fit.method)) return covariance_coefficients(take_rows(xmy, idx));
    std::vector<Vector> coefs;
    for (std::size_t e = 0; e < fit.equations.size(); ++e) {
      const auto& eq = fit.equations[e].design;
      switch (fit.method) {
        case Method::RegressionMM:
          coefs.push_back(frb_replicate(eq.x, eq.y, idx, frb[e]));
          break;
        case Method::RegressionOLS:
          coefs.push_back(fit_ols(take_rows(eq.x, idx), eq.rows(idx).y).coefficients);
          break;
        default: {
          const auto sub = eq.rows(idx);
          coefs.push_back(fit_median_regression(sub.x, sub.y, cfg.median).coefficients);
        }
      }
    }
    return coefs;
  }

  // The point estimator itself on a subset of rows (jackknife).
  std::vector<Vector> point(const std::vector<std::size_t>& idx) const {
    if (fit.method != Method::RegressionMM) return replicate(idx);
    std::vector<Vector> coefs;
    for (std::size_t e = 0; e < fit.equations.size(); ++e) {
      const auto sub = fit.equations[e].design.rows(idx);
      coefs.push_back(
          fit_mm_regression(sub.x, sub.y, cfg.mm, equation_seed(fit.seed, e)).coefficients);
    }
    return coefs;
  }
};

Matrix jackknife_matrix(const MediationFit& fit, const Refitter& refit, unsigned threads) {
  const std::size_t n = fit.n_used;
  const auto E = static_cast<Eigen::Index>(fit.labels.size());
  Matrix out(static_cast<Eigen::Index>(n), E);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<std::size_t> idx;
    idx.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) idx.push_back(j);
    }
    try {
      const auto coefs = refit.point(idx);
      out.row(static_cast<Eigen::Index>(i)) =
          effects_from_paths(fit.spec, fit.labels, extract_paths(fit.spec, coefs)).transpose();
    } catch (const Error& err) {
      if (!is_replicate_failure(err.kind())) throw;
      out.row(static_cast<Eigen::Index>(i)).setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  });
  return out;
}

}  // namespace

Matrix jackknife_effects(const ModelSpec& spec, const DesignBundle& data, Method method,
                         const FitConfig& fit_cfg, std::uint64_t seed, unsigned threads) {
  const auto fit = fit_mediation(spec, data, method, fit_cfg, seed);
  return jackknife_matrix(fit, Refitter(fit, fit_cfg), resolve_threads(threads));
}

double jackknife_acceleration(const ModelSpec& spec, const DesignBundle& data, Method method,
                              const std::string& label, const FitConfig& fit_cfg,
                              std::uint64_t seed) {
  const auto fit = fit_mediation(spec, data, method, fit_cfg, seed);
  const auto col = static_cast<Eigen::Index>(fit.label_index(label));
  const Matrix loo = jackknife_matrix(fit, Refitter(fit, fit_cfg), 1);
  std::vector<double> v(loo.col(col).data(), loo.col(col).data() + loo.rows());
  return jackknife_acceleration(v);
}

// ---------------------------------------------------------------------------
// Bootstrap driver

std::size_t BootstrapResult::label_index(const std::string& name) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].name == name || (labels[i].is_indirect() && labels[i].row == name)) return i;
  }
  fail(ErrorKind::InvalidArgument, "unknown effect label '" + name + "'");
}

std::vector<double> BootstrapResult::column(std::size_t label) const {
  const auto c = replicates.col(static_cast<Eigen::Index>(label));
  return {c.data(), c.data() + c.size()};
}

BootstrapResult bootstrap_test(const ModelSpec& spec, const DesignBundle& data, Method method,
                               const BootstrapConfig& cfg, const FitConfig& fit_cfg,
                               unsigned threads) {
  validate(cfg);
  check_method_model(spec, method);
  threads = resolve_threads(threads);

  BootstrapResult out;
  out.config = cfg;
  out.fit = fit_mediation(spec, data, method, fit_cfg, cfg.seed);
  const auto& fit = out.fit;
  const Refitter refit(fit, fit_cfg);
  const std::size_t n = fit.n_used;
  const std::size_t R = cfg.R;
  const auto E = static_cast<Eigen::Index>(fit.labels.size());

  Matrix effects(static_cast<Eigen::Index>(R), E);
  std::vector<Matrix> coefs(fit.equations.size());
  for (std::size_t e = 0; e < coefs.size(); ++e) {
    coefs[e].resize(static_cast<Eigen::Index>(R), fit.equations[e].fit.coefficients.size());
  }
  std::vector<unsigned char> ok(R, 0);
  std::vector<unsigned> attempts(R, 0);

  parallel_for(R, threads, [&](std::size_t r) {
    for (unsigned attempt = 0; attempt < kMaxAttempts; ++attempt) {
      attempts[r] = attempt;
      try {
        const auto c = refit.replicate(replicate_indices(n, cfg.seed, r, attempt));
        const auto row = static_cast<Eigen::Index>(r);
        effects.row(row) =
            effects_from_paths(fit.spec, fit.labels, extract_paths(fit.spec, c)).transpose();
        for (std::size_t e = 0; e < c.size(); ++e) coefs[e].row(row) = c[e].transpose();
        ok[r] = 1;
        return;
      } catch (const Error& err) {
        if (!is_replicate_failure(err.kind())) throw;
      }
    }
  });

  std::vector<Eigen::Index> kept;
  for (std::size_t r = 0; r < R; ++r) {
    if (ok[r]) {
      kept.push_back(static_cast<Eigen::Index>(r));
      if (attempts[r] > 0) ++out.redrawn;
    } else {
      ++out.discarded;
    }
  }
  if (static_cast<double>(out.discarded) > 0.01 * static_cast<double>(R)) {
    fail(ErrorKind::TooManyDiscardedReplicates,
         "TooManyDiscardedReplicates: " + std::to_string(out.discarded) + " of " +
             std::to_string(R) + " bootstrap samples could not be fitted");
  }
  out.replicates = effects(kept, Eigen::all);
  for (auto& m : coefs) m = Matrix(m(kept, Eigen::all));
  out.coefficient_replicates = std::move(coefs);

  if (cfg.jackknife) {
    out.jackknife = jackknife_matrix(fit, refit, threads);
  }
  analyze(out);
  return out;
}

// ---------------------------------------------------------------------------
// Analysis of stored replicates

std::vector<EffectLabel> contrast_labels(const std::vector<EffectLabel>& base,
                                         ContrastMode mode,
                                         const std::vector<std::string>& subset) {
  std::vector<std::size_t> paths;
  auto selected = [&](const EffectLabel& e) {
    return subset.empty() || std::find_if(subset.begin(), subset.end(), [&](const std::string& s) {
                               return s == e.name || s == e.row;
                             }) != subset.end();
  };
  for (std::size_t b = 0; b < base.size(); ++b) {
    if (base[b].role == EffectRole::Indirect && selected(base[b])) paths.push_back(b);
  }
  for (const auto& s : subset) {
    if (std::none_of(paths.begin(), paths.end(), [&](std::size_t b) {
          return s == base[b].name || s == base[b].row;
        })) {
      fail(ErrorKind::InvalidArgument, "unknown indirect effect '" + s + "' in contrast list");
    }
  }
  if (paths.size() < 2) {
    fail(ErrorKind::TooFewPaths, "TooFewPaths: contrasts need at least two indirect effects");
  }
  std::vector<EffectLabel> out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = i + 1; j < paths.size(); ++j) {
      const auto& lhs = base[paths[i]];
      const auto& rhs = base[paths[j]];
      EffectLabel c;
      c.role = EffectRole::Contrast;
      // For contrasts, `path` holds the two base label indices.
      c.path = {static_cast<int>(paths[i]), static_cast<int>(paths[j])};
      c.display = mode == ContrastMode::Absolute ? "|" + lhs.row + "| - |" + rhs.row + "|"
                                                 : lhs.row + " - " + rhs.row;
      out.push_back(std::move(c));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].name = out.size() == 1 ? "Contrast" : "Contrast" + std::to_string(i + 1);
    out[i].row = out[i].name;
  }
  return out;
}

namespace {

double contrast_value(double lhs, double rhs, ContrastMode mode) {
  return mode == ContrastMode::Absolute ? std::abs(lhs) - std::abs(rhs) : lhs - rhs;
}

std::vector<double> finite_column(const Matrix& m, Eigen::Index col) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (std::isfinite(m(i, col))) v.push_back(m(i, col));
  }
  return v;
}

}  // namespace

Interval label_interval(const BootstrapResult& result, std::size_t label, double level) {
  const auto sorted = sorted_copy(result.column(label));
  if (result.config.ci_type == CiType::Percentile) return percentile_from_sorted(sorted, level);
  return bca_from_sorted(sorted, result.data_estimates(static_cast<Eigen::Index>(label)),
                         result.acceleration[label], level, nullptr);
}

void analyze(BootstrapResult& result) {
  const auto& cfg = result.config;
  validate(cfg);
  const auto& fit = result.fit;
  const std::size_t base = fit.labels.size();
  if (result.replicates.rows() == 0 || static_cast<std::size_t>(result.replicates.cols()) < base) {
    fail(ErrorKind::MissingReplicates, "MissingReplicates: no bootstrap replicates stored");
  }
  result.base_label_count = base;
  result.labels = fit.labels;
  Matrix reps = result.replicates.leftCols(static_cast<Eigen::Index>(base));
  Vector data = fit.effects;
  Matrix jack = result.jackknife;

  if (cfg.contrast != ContrastMode::None) {
    const auto contrasts = contrast_labels(fit.labels, cfg.contrast, cfg.contrast_labels);
    const auto old = static_cast<Eigen::Index>(base);
    const auto k = static_cast<Eigen::Index>(contrasts.size());
    Matrix wide(reps.rows(), old + k);
    wide.leftCols(old) = reps;
    Vector wide_data(old + k);
    wide_data.head(old) = data;
    Matrix wide_jack(jack.rows(), jack.rows() ? old + k : 0);
    if (jack.rows()) wide_jack.leftCols(old) = jack;
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto& lab = contrasts[static_cast<std::size_t>(c)];
      const Eigen::Index i = lab.path[0];
      const Eigen::Index j = lab.path[1];
      for (Eigen::Index r = 0; r < reps.rows(); ++r) {
        wide(r, old + c) = contrast_value(reps(r, i), reps(r, j), cfg.contrast);
      }
      wide_data(old + c) = contrast_value(data(i), data(j), cfg.contrast);
      for (Eigen::Index r = 0; r < jack.rows(); ++r) {
        wide_jack(r, old + c) = contrast_value(jack(r, i), jack(r, j), cfg.contrast);
      }
      result.labels.push_back(lab);
    }
    reps = std::move(wide);
    data = std::move(wide_data);
    jack = std::move(wide_jack);
  }

  result.replicates = std::move(reps);
  result.data_estimates = std::move(data);
  const std::size_t E = result.labels.size();
  result.boot_estimates.resize(static_cast<Eigen::Index>(E));
  for (std::size_t l = 0; l < E; ++l) {
    const auto col = result.replicates.col(static_cast<Eigen::Index>(l));
    result.boot_estimates(static_cast<Eigen::Index>(l)) =
        std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
  }

  result.acceleration.assign(E, 0.0);
  result.intervals.assign(E, std::nullopt);
  for (std::size_t l = 0; l < E; ++l) {
    if (!result.labels[l].is_indirect()) continue;
    if (cfg.ci_type == CiType::BCa && jack.rows() > 0) {
      result.acceleration[l] = jackknife_acceleration(finite_column(jack, static_cast<Eigen::Index>(l)));
    }
    result.intervals[l] = label_interval(result, l, cfg.level);
  }
}

BootstrapResult retest(const BootstrapResult& stored, const RetestSettings& settings) {
  if (stored.replicates.rows() == 0) {
    fail(ErrorKind::MissingReplicates, "MissingReplicates: result holds no replicates");
  }
  BootstrapResult out = stored;
  if (settings.level) out.config.level = *settings.level;
  if (settings.ci_type) out.config.ci_type = *settings.ci_type;
  if (settings.contrast) out.config.contrast = *settings.contrast;
  if (settings.contrast_labels) out.config.contrast_labels = *settings.contrast_labels;
  const auto base = static_cast<Eigen::Index>(stored.fit.labels.size());
  out.replicates = Matrix(stored.replicates.leftCols(base));
  if (out.jackknife.cols() > base) out.jackknife = Matrix(out.jackknife.leftCols(base));
  analyze(out);
  return out;
}

double p_value(const BootstrapResult& result, const std::string& label, double precision) {
  const std::size_t l = result.label_index(label);
  if (!result.labels[l].is_indirect()) {
    fail(ErrorKind::InvalidArgument, "p_value needs an indirect effect or contrast label");
  }
  auto excludes_zero = [&](double alpha) {
    const Interval ci = label_interval(result, l, 1.0 - alpha);
    return ci.lo > 0.0 || ci.hi < 0.0;
  };
  double lo = 0.0;
  double hi = 1.0;
  if (!excludes_zero(1.0 - precision / 2.0)) return 1.0;
  while (hi - lo > precision) {
    const double mid = 0.5 * (lo + hi);
    if (excludes_zero(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// ---------------------------------------------------------------------------
// z-tests

ZTest z_test_column(const std::string& name, double data, const std::vector<double>& column) {
  ZTest t;
  t.name = name;
  t.data = data;
  const double R = static_cast<double>(column.size());
  t.boot = std::accumulate(column.begin(), column.end(), 0.0) / R;
  double ss = 0.0;
  for (double v : column) ss += (v - t.boot) * (v - t.boot);
  t.sd = column.size() > 1 ? std::sqrt(ss / (R - 1.0)) : 0.0;
  if (!(t.sd > 0.0)) {
    t.zero_variance = true;
    t.z = 0.0;
    t.p = 1.0;
    return t;
  }
  t.z = t.boot / t.sd;
  t.p = normal_two_sided_p(t.z);
  return t;
}

BootZTests boot_z_tests(const BootstrapResult& result) {
  BootZTests out;
  const auto& fit = result.fit;
  for (std::size_t e = 0; e < fit.equations.size(); ++e) {
    const auto& eq = fit.equations[e];
    const Matrix& reps = result.coefficient_replicates[e];
    std::vector<ZTest> table;
    for (Eigen::Index j = 0; j < reps.cols(); ++j) {
      const auto col = reps.col(j);
      table.push_back(z_test_column(eq.design.regressors[static_cast<std::size_t>(j)],
                                    eq.fit.coefficients(j), {col.data(), col.data() + col.size()}));
    }
    out.coefficients.push_back(std::move(table));
  }
  for (std::size_t l = 0; l < result.base_label_count; ++l) {
    const auto& lab = result.labels[l];
    if (lab.role != EffectRole::Total && lab.role != EffectRole::Direct) continue;
    auto t = z_test_column(fit.spec.independents[static_cast<std::size_t>(lab.x)],
                           result.data_estimates(static_cast<Eigen::Index>(l)), result.column(l));
    (lab.role == EffectRole::Total ? out.total : out.direct).push_back(std::move(t));
  }
  return out;
}

WaldTest bootstrap_wald(const BootstrapResult& result, std::size_t equation) {
  const Matrix& reps = result.coefficient_replicates.at(equation);
  const auto p = reps.cols() - 1;
  WaldTest w;
  w.df = static_cast<int>(p);
  if (p < 1 || reps.rows() < 2) return w;
  const Matrix slopes = reps.rightCols(p);
  const Matrix centered = slopes.rowwise() - slopes.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(reps.rows() - 1);
  const Vector beta = result.fit.equations[equation].fit.coefficients.tail(p);
  Eigen::LDLT<Matrix> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
    w.statistic = std::numeric_limits<double>::quiet_NaN();
    w.p = std::numeric_limits<double>::quiet_NaN();
    return w;
  }
  w.statistic = beta.dot(ldlt.solve(beta));
  w.p = 1.0 - chi_squared_cdf(w.statistic, static_cast<double>(p));
  return w;
}

// ---------------------------------------------------------------------------
// Sobel

const char* to_string(SobelOrder order) {
  return order == SobelOrder::First ? "first" : "second";
}

SobelOrder sobel_order_from_string(const std::string& text) {
  if (text == "first") return SobelOrder::First;
  if (text == "second") return SobelOrder::Second;
  fail(ErrorKind::InvalidArgument, "unknown Sobel order '" + text + "' (first, second)");
}

SobelResult sobel_from(double a, double se_a, double b, double se_b, SobelOrder order) {
  SobelResult s;
  s.a = a;
  s.b = b;
  s.se_a = se_a;
  s.se_b = se_b;
  s.order = order;
  s.estimate = a * b;
  double var = b * b * se_a * se_a + a * a * se_b * se_b;
  if (order == SobelOrder::Second) var += se_a * se_a * se_b * se_b;
  s.std_error = std::sqrt(var);
  if (!(s.std_error > 0.0)) {
    if (s.estimate == 0.0) {
      s.z = 0.0;
      s.p = 1.0;
      return s;
    }
    fail(ErrorKind::ZeroStandardError, "ZeroStandardError: Sobel standard error is zero");
  }
  s.z = s.estimate / s.std_error;
  s.p = normal_two_sided_p(s.z);
  return s;
}

SobelResult sobel_test(const MediationFit& fit, SobelOrder order) {
  if (!fit.spec.simple()) {
    fail(ErrorKind::MethodModelMismatch,
         "MethodModelMismatch: the Sobel test is available for simple mediation only");
  }
  const auto& med = fit.equations[0].fit;
  const auto& out = fit.equations[1].fit;
  // Mediator equation: (Intercept), X, ...; outcome: (Intercept), M, X, ...
  const double a = med.coefficients(1);
  const double b = out.coefficients(1);
  const double se_a = std::sqrt(std::max(med.covariance(1, 1), 0.0));
  const double se_b = std::sqrt(std::max(out.covariance(1, 1), 0.0));
  return sobel_from(a, se_a, b, se_b, order);
}

}  // namespace frbmed
