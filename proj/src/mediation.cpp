#include "frbmed/mediation.hpp"

#include <cmath>
#include <limits>

#include "frbmed/error.hpp"
#include "frbmed/rng.hpp"

namespace frbmed {

const char* to_string(Method method) {
  switch (method) {
    case Method::RegressionOLS: return "regression-ols";
    case Method::RegressionMM: return "regression-mm";
    case Method::RegressionMedian: return "regression-median";
    case Method::CovML: return "covariance-ml";
    case Method::CovWinsorized: return "covariance-winsorized";
  }
  return "?";
}

Method method_from_string(const std::string& text) {
  for (Method m : {Method::RegressionOLS, Method::RegressionMM, Method::RegressionMedian,
                   Method::CovML, Method::CovWinsorized}) {
    if (text == to_string(m)) return m;
  }
  fail(ErrorKind::InvalidArgument, "unknown method '" + text + "'");
}

bool is_covariance(Method method) {
  return method == Method::CovML || method == Method::CovWinsorized;
}

EquationDesign EquationDesign::rows(const std::vector<std::size_t>& idx) const {
  EquationDesign out;
  out.response = response;
  out.regressors = regressors;
  const auto n = static_cast<Eigen::Index>(idx.size());
  out.x.resize(n, x.cols());
  out.y.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]);
    out.x.row(r) = x.row(src);
    out.y(r) = y(src);
  }
  return out;
}

std::vector<EquationDesign> build_equations(const ModelSpec& spec, const DesignBundle& data) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto l = data.x.cols();
  const auto k = data.m.cols();
  const auto q = data.covariates.cols();
  std::vector<EquationDesign> out;

  auto fill_tail = [&](EquationDesign& eq, Eigen::Index col) {
    for (Eigen::Index i = 0; i < l; ++i) {
      eq.x.col(col++) = data.x.col(i);
      eq.regressors.push_back(data.x_names[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index i = 0; i < q; ++i) {
      eq.x.col(col++) = data.covariates.col(i);
      eq.regressors.push_back(data.cov_names[static_cast<std::size_t>(i)]);
    }
  };

  for (Eigen::Index j = 0; j < k; ++j) {
    EquationDesign eq;
    eq.response = data.m_names[static_cast<std::size_t>(j)];
    const Eigen::Index prev = spec.serial() ? j : 0;
    eq.x.resize(n, 1 + prev + l + q);
    eq.x.col(0).setOnes();
    eq.regressors.push_back("(Intercept)");
    for (Eigen::Index t = 0; t < prev; ++t) {
      eq.x.col(1 + t) = data.m.col(t);
      eq.regressors.push_back(data.m_names[static_cast<std::size_t>(t)]);
    }
    fill_tail(eq, 1 + prev);
    eq.y = data.m.col(j);
    out.push_back(std::move(eq));
  }

  EquationDesign outcome;
  outcome.response = data.y_name;
  outcome.x.resize(n, 1 + k + l + q);
  outcome.x.col(0).setOnes();
  outcome.regressors.push_back("(Intercept)");
  for (Eigen::Index t = 0; t < k; ++t) {
    outcome.x.col(1 + t) = data.m.col(t);
    outcome.regressors.push_back(data.m_names[static_cast<std::size_t>(t)]);
  }
  fill_tail(outcome, 1 + k);
  outcome.y = data.y;
  out.push_back(std::move(outcome));
  return out;
}

CoefficientBundle extract_paths(const ModelSpec& spec, const std::vector<Vector>& coefficients) {
  const auto l = static_cast<Eigen::Index>(spec.n_x());
  const auto k = static_cast<Eigen::Index>(spec.n_m());
  if (static_cast<Eigen::Index>(coefficients.size()) != k + 1) {
    fail(ErrorKind::InvalidArgument, "extract_paths: expected one coefficient vector per equation");
  }
  CoefficientBundle p;
  p.a = Matrix::Zero(l, k);
  p.d = Matrix::Zero(k, k);
  p.b.resize(k);
  p.c.resize(l);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Vector& beta = coefficients[static_cast<std::size_t>(j)];
    const Eigen::Index prev = spec.serial() ? j : 0;
    for (Eigen::Index t = 0; t < prev; ++t) p.d(j, t) = beta(1 + t);
    for (Eigen::Index i = 0; i < l; ++i) p.a(i, j) = beta(1 + prev + i);
  }
  const Vector& outcome = coefficients.back();
  for (Eigen::Index j = 0; j < k; ++j) p.b(j) = outcome(1 + j);
  for (Eigen::Index i = 0; i < l; ++i) p.c(i) = outcome(1 + k + i);
  return p;
}

namespace {

double path_product(const CoefficientBundle& p, int x, const std::vector<int>& path) {
  double v = p.a(x, path.front());
  for (std::size_t t = 1; t < path.size(); ++t) v *= p.d(path[t], path[t - 1]);
  return v * p.b(path.back());
}

}  // namespace

Vector effects_from_paths(const ModelSpec& spec, const std::vector<EffectLabel>& labels,
                          const CoefficientBundle& paths) {
  const auto l = spec.n_x();
  std::vector<double> indirect_sum(l, 0.0);
  for (const auto& e : labels) {
    if (e.role == EffectRole::Indirect) indirect_sum[static_cast<std::size_t>(e.x)] += path_product(paths, e.x, e.path);
  }
  Vector out(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& e = labels[i];
    double v = std::numeric_limits<double>::quiet_NaN();
    switch (e.role) {
      case EffectRole::A: v = paths.a(e.x, e.m); break;
      case EffectRole::D: v = paths.d(e.m, e.m_from); break;
      case EffectRole::B: v = paths.b(e.m); break;
      case EffectRole::Direct: v = paths.c(e.x); break;
      case EffectRole::Total: v = indirect_sum[static_cast<std::size_t>(e.x)] + paths.c(e.x); break;
      case EffectRole::Indirect: v = path_product(paths, e.x, e.path); break;
      case EffectRole::TotalIndirect: v = indirect_sum[static_cast<std::size_t>(e.x)]; break;
      case EffectRole::Contrast:
        fail(ErrorKind::InvalidArgument, "contrast labels are derived from bootstrap replicates");
    }
    out(static_cast<Eigen::Index>(i)) = v;
  }
  return out;
}

std::vector<std::pair<std::string, double>> indirect_products(const CoefficientBundle& paths,
                                                              const ModelSpec& spec) {
  std::vector<EffectLabel> labels;
  for (auto& e : enumerate_effects(spec)) {
    if (e.role == EffectRole::Indirect || e.role == EffectRole::TotalIndirect) labels.push_back(e);
  }
  const Vector v = effects_from_paths(spec, labels, paths);
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.emplace_back(labels[i].name, v(static_cast<Eigen::Index>(i)));
  }
  return out;
}

double MediationFit::effect(const std::string& name) const {
  return effects(static_cast<Eigen::Index>(label_index(name)));
}

std::size_t MediationFit::label_index(const std::string& name) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].name == name) return i;
  }
  fail(ErrorKind::InvalidArgument, "unknown effect label '" + name + "'");
}

void check_method_model(const ModelSpec& spec, Method method) {
  validate(spec);
  if (is_covariance(method) && (!spec.simple() || !spec.covariates.empty())) {
    fail(ErrorKind::MethodModelMismatch,
         "MethodModelMismatch: covariance-based estimation supports only the simple mediation "
         "model without covariates");
  }
}

std::uint64_t equation_seed(std::uint64_t seed, std::size_t equation) {
  return derive_seed(seed, 0x45510000ULL + equation);
}

namespace {

Matrix xmy_columns(const DesignBundle& data) {
  Matrix z(static_cast<Eigen::Index>(data.n()), 3);
  z.col(0) = data.x.col(0);
  z.col(1) = data.m.col(0);
  z.col(2) = data.y;
  return z;
}

// Equations and fits implied by a covariance estimate, evaluated on `data`.
std::vector<EquationFit> covariance_equations(const ModelSpec& spec, const DesignBundle& data,
                                              const SimpleMediationCoefficients& coef) {
  auto designs = build_equations(spec, data);
  std::vector<EquationFit> out;
  const std::vector<Vector> betas = {
      (Vector(2) << coef.intercept_m, coef.a).finished(),
      (Vector(3) << coef.intercept_y, coef.b, coef.c).finished()};
  const double resvar[] = {coef.residual_var_m, coef.residual_var_y};
  for (std::size_t e = 0; e < 2; ++e) {
    EquationFit ef;
    ef.design = std::move(designs[e]);
    auto& f = ef.fit;
    f.method = FitMethod::Covariance;
    f.coefficients = betas[e];
    f.residuals = ef.design.y - ef.design.x * f.coefficients;
    f.weights = Vector::Ones(f.residuals.size());
    f.scale = std::sqrt(std::max(resvar[e], 0.0));
    const Matrix gram = ef.design.x.transpose() * ef.design.x;
    f.covariance = std::max(resvar[e], 0.0) * gram.inverse();
    out.push_back(std::move(ef));
  }
  return out;
}

RegressionFit fit_equation(const EquationDesign& eq, Method method, const FitConfig& cfg,
                           std::uint64_t seed) {
  switch (method) {
    case Method::RegressionOLS: return fit_ols(eq.x, eq.y);
    case Method::RegressionMM: return fit_mm_regression(eq.x, eq.y, cfg.mm, seed);
    case Method::RegressionMedian: return fit_median_regression(eq.x, eq.y, cfg.median);
    default: break;
  }
  fail(ErrorKind::InvalidArgument, "fit_equation: not a regression method");
}

}  // namespace

MediationFit fit_mediation(const ModelSpec& spec, const DesignBundle& data, Method method,
                           const FitConfig& cfg, std::uint64_t seed) {
  check_method_model(spec, method);
  MediationFit out;
  out.spec = spec;
  out.method = method;
  out.labels = enumerate_effects(spec);
  out.n_used = data.n();
  out.dropped_rows = data.dropped_rows;
  out.source_rows = data.source_rows;
  out.seed = seed;
  out.config = cfg;

  std::vector<Vector> coefs;
  if (is_covariance(method)) {
    const Matrix z = xmy_columns(data);
    CovarianceEstimate est = method == Method::CovML ? ml_covariance(z)
                                                     : huber_winsorize(z, cfg.winsor_quantile);
    const auto coef = mediation_from_covariance(est);
    DesignBundle used = data;
    if (est.winsorized_data) {
      used.x.col(0) = est.winsorized_data->col(0);
      used.m.col(0) = est.winsorized_data->col(1);
      used.y = est.winsorized_data->col(2);
    }
    out.equations = covariance_equations(spec, used, coef);
    out.covariance = std::move(est);
  } else {
    auto designs = build_equations(spec, data);
    for (std::size_t e = 0; e < designs.size(); ++e) {
      EquationFit ef;
      try {
        ef.fit = fit_equation(designs[e], method, cfg, equation_seed(seed, e));
      } catch (const Error& err) {
        throw Error(err.kind(), "equation '" + designs[e].response + "': " + err.what());
      }
      ef.design = std::move(designs[e]);
      out.equations.push_back(std::move(ef));
    }
  }
  for (const auto& ef : out.equations) coefs.push_back(ef.fit.coefficients);
  out.effects = effects_from_paths(spec, out.labels, extract_paths(spec, coefs));
  return out;
}

std::vector<Vector> fit_coefficients(const ModelSpec& spec, const DesignBundle& data,
                                     Method method, const FitConfig& cfg, std::uint64_t seed) {
  std::vector<Vector> coefs;
  if (is_covariance(method)) {
    const Matrix z = xmy_columns(data);
    const auto est = method == Method::CovML ? ml_covariance(z) : huber_winsorize(z, cfg.winsor_quantile);
    const auto c = mediation_from_covariance(est);
    coefs.push_back((Vector(2) << c.intercept_m, c.a).finished());
    coefs.push_back((Vector(3) << c.intercept_y, c.b, c.c).finished());
    return coefs;
  }
  const auto designs = build_equations(spec, data);
  for (std::size_t e = 0; e < designs.size(); ++e) {
    coefs.push_back(fit_equation(designs[e], method, cfg, equation_seed(seed, e)).coefficients);
  }
  return coefs;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json vec_json(const Vector& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      arr.push_back(v(i));
    } else {
      arr.push_back(nullptr);
    }
  }
  return arr;
}

Vector vec_from(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) =
        j[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : j[i].get<double>();
  }
  return v;
}

nlohmann::json mat_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

Matrix mat_from(const nlohmann::json& j, Eigen::Index cols_hint = 0) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : cols_hint;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = vec_from(j[static_cast<std::size_t>(r)]).transpose();
  return m;
}

FitMethod fit_method_from(const std::string& s) {
  for (FitMethod m : {FitMethod::OLS, FitMethod::S, FitMethod::MM, FitMethod::Median,
                      FitMethod::WLS, FitMethod::Covariance}) {
    if (s == to_string(m)) return m;
  }
  fail(ErrorKind::CorruptFile, "CorruptFile: unknown fit method '" + s + "'");
}

}  // namespace

nlohmann::json to_json(const FitConfig& cfg) {
  const auto& s = cfg.mm.s;
  return {{"mm", {{"c", cfg.mm.c}, {"tol", cfg.mm.tol}, {"max_iter", cfg.mm.max_iter}}},
          {"s", {{"c", s.c_s},
                 {"delta", s.delta},
                 {"n_subsamples", s.n_subsamples},
                 {"k_refine_steps", s.k_refine_steps},
                 {"best_candidates", s.best_candidates},
                 {"tol", s.tol},
                 {"max_iter", s.max_iter}}},
          {"median", {{"irls_iterations", cfg.median.irls_iterations},
                      {"eps_start", cfg.median.eps_start},
                      {"eps_min", cfg.median.eps_min},
                      {"max_vertex_steps", cfg.median.max_vertex_steps}}},
          {"winsor_quantile", cfg.winsor_quantile}};
}

FitConfig fit_config_from_json(const nlohmann::json& j) {
  FitConfig cfg;
  const auto& mm = j.at("mm");
  cfg.mm.c = mm.at("c").get<double>();
  cfg.mm.tol = mm.at("tol").get<double>();
  cfg.mm.max_iter = mm.at("max_iter").get<int>();
  const auto& s = j.at("s");
  cfg.mm.s.c_s = s.at("c").get<double>();
  cfg.mm.s.delta = s.at("delta").get<double>();
  cfg.mm.s.n_subsamples = s.at("n_subsamples").get<int>();
  cfg.mm.s.k_refine_steps = s.at("k_refine_steps").get<int>();
  cfg.mm.s.best_candidates = s.at("best_candidates").get<int>();
  cfg.mm.s.tol = s.at("tol").get<double>();
  cfg.mm.s.max_iter = s.at("max_iter").get<int>();
  const auto& md = j.at("median");
  cfg.median.irls_iterations = md.at("irls_iterations").get<int>();
  cfg.median.eps_start = md.at("eps_start").get<double>();
  cfg.median.eps_min = md.at("eps_min").get<double>();
  cfg.median.max_vertex_steps = md.at("max_vertex_steps").get<int>();
  cfg.winsor_quantile = j.at("winsor_quantile").get<double>();
  return cfg;
}

nlohmann::json fit_to_json(const MediationFit& fit, bool include_data) {
  nlohmann::json j;
  j["model"] = fit.spec;
  j["formula"] = render_formula(fit.spec);
  j["method"] = to_string(fit.method);
  j["n_used"] = fit.n_used;
  j["dropped_rows"] = fit.dropped_rows;
  j["seed"] = fit.seed;
  j["estimator"] = to_json(fit.config);
  auto eqs = nlohmann::json::array();
  for (const auto& ef : fit.equations) {
    nlohmann::json e;
    e["response"] = ef.design.response;
    e["regressors"] = ef.design.regressors;
    e["coefficients"] = vec_json(ef.fit.coefficients);
    e["scale"] = std::isfinite(ef.fit.scale) ? nlohmann::json(ef.fit.scale) : nlohmann::json(nullptr);
    e["fit_method"] = to_string(ef.fit.method);
    e["converged"] = ef.fit.converged;
    e["iterations"] = ef.fit.iterations;
    e["zero_scale"] = ef.fit.zero_scale;
    e["covariance"] = mat_json(ef.fit.covariance);
    if (include_data) {
      e["weights"] = vec_json(ef.fit.weights);
      e["residuals"] = vec_json(ef.fit.residuals);
      e["x"] = mat_json(ef.design.x);
      e["y"] = vec_json(ef.design.y);
    }
    eqs.push_back(std::move(e));
  }
  j["equations"] = std::move(eqs);
  auto effects = nlohmann::json::array();
  for (std::size_t i = 0; i < fit.labels.size(); ++i) {
    const double v = fit.effects(static_cast<Eigen::Index>(i));
    effects.push_back({{"label", fit.labels[i].name},
                       {"display", fit.labels[i].display},
                       {"value", std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr)}});
  }
  j["effects"] = std::move(effects);
  if (include_data) j["source_rows"] = fit.source_rows;
  if (fit.covariance) {
    j["covariance_estimate"] = {{"center", vec_json(fit.covariance->center)},
                                {"sigma", mat_json(fit.covariance->sigma)},
                                {"tuning_quantile", fit.covariance->tuning_quantile}};
  }
  return j;
}

MediationFit fit_from_json(const nlohmann::json& j) {
  MediationFit fit;
  fit.spec = j.at("model").get<ModelSpec>();
  fit.method = method_from_string(j.at("method").get<std::string>());
  fit.n_used = j.at("n_used").get<std::size_t>();
  fit.dropped_rows = j.at("dropped_rows").get<std::size_t>();
  fit.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("estimator")) fit.config = fit_config_from_json(j.at("estimator"));
  fit.labels = enumerate_effects(fit.spec);
  for (const auto& e : j.at("equations")) {
    EquationFit ef;
    ef.design.response = e.at("response").get<std::string>();
    ef.design.regressors = e.at("regressors").get<std::vector<std::string>>();
    const auto p = static_cast<Eigen::Index>(ef.design.regressors.size());
    ef.fit.coefficients = vec_from(e.at("coefficients"));
    ef.fit.scale = e.at("scale").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : e.at("scale").get<double>();
    ef.fit.method = fit_method_from(e.at("fit_method").get<std::string>());
    ef.fit.converged = e.at("converged").get<bool>();
    ef.fit.iterations = e.at("iterations").get<int>();
    ef.fit.zero_scale = e.at("zero_scale").get<bool>();
    ef.fit.covariance = mat_from(e.at("covariance"), p);
    if (e.contains("weights")) {
      ef.fit.weights = vec_from(e.at("weights"));
      ef.fit.residuals = vec_from(e.at("residuals"));
      ef.design.x = mat_from(e.at("x"), p);
      ef.design.y = vec_from(e.at("y"));
    }
    fit.equations.push_back(std::move(ef));
  }
  const auto& effects = j.at("effects");
  fit.effects.resize(static_cast<Eigen::Index>(fit.labels.size()));
  if (effects.size() != fit.labels.size()) {
    fail(ErrorKind::CorruptFile, "CorruptFile: effect list does not match the model");
  }
  for (std::size_t i = 0; i < effects.size(); ++i) {
    const auto& v = effects[i].at("value");
    fit.effects(static_cast<Eigen::Index>(i)) =
        v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  }
  if (j.contains("source_rows")) fit.source_rows = j.at("source_rows").get<std::vector<std::size_t>>();
  if (j.contains("covariance_estimate")) {
    CovarianceEstimate est;
    est.center = vec_from(j["covariance_estimate"].at("center"));
    est.sigma = mat_from(j["covariance_estimate"].at("sigma"), 3);
    est.tuning_quantile = j["covariance_estimate"].at("tuning_quantile").get<double>();
    fit.covariance = std::move(est);
  }
  return fit;
}

}  // namespace frbmed
