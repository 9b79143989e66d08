#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "frbmed/covariance.hpp"
#include "frbmed/model_spec.hpp"
#include "frbmed/robust.hpp"
#include "json.hpp"

namespace frbmed {

enum class Method { RegressionOLS, RegressionMM, RegressionMedian, CovML, CovWinsorized };

const char* to_string(Method method);
Method method_from_string(const std::string& text);
bool is_covariance(Method method);

struct FitConfig {
  MMConfig mm;
  MedianConfig median;
  double winsor_quantile = 0.95;
};

/// One regression equation of the model. Regressor order is fixed:
/// intercept, earlier serial mediators (mediator equations) or all
/// mediators (outcome equation), independents, covariates.
struct EquationDesign {
  std::string response;
  std::vector<std::string> regressors;  // "(Intercept)" first
  Matrix x;
  Vector y;

  EquationDesign rows(const std::vector<std::size_t>& idx) const;
};

std::vector<EquationDesign> build_equations(const ModelSpec& spec, const DesignBundle& data);

struct EquationFit {
  EquationDesign design;
  RegressionFit fit;
};

/// Path coefficients in matrix form: a(x, m), d(to, from), b(m), c(x).
struct CoefficientBundle {
  Matrix a;  // l x k
  Matrix d;  // k x k, d(j, l) is the effect of mediator l on mediator j
  Vector b;  // k
  Vector c;  // l
};

/// Picks the path coefficients out of per-equation coefficient vectors laid
/// out as in build_equations.
CoefficientBundle extract_paths(const ModelSpec& spec, const std::vector<Vector>& coefficients);

/// One product per enumerated indirect path, plus the total indirect effect
/// per x where one exists; keyed and ordered like enumerate_effects.
std::vector<std::pair<std::string, double>> indirect_products(const CoefficientBundle& paths,
                                                              const ModelSpec& spec);

/// Values for every label in `labels` (which must come from
/// enumerate_effects(spec)). Total effects are indirect sum plus direct.
Vector effects_from_paths(const ModelSpec& spec, const std::vector<EffectLabel>& labels,
                          const CoefficientBundle& paths);

struct MediationFit {
  ModelSpec spec;
  Method method = Method::RegressionMM;
  std::vector<EquationFit> equations;  // mediator equations, then the outcome
  std::vector<EffectLabel> labels;
  Vector effects;  // aligned with labels
  std::size_t n_used = 0;
  std::size_t dropped_rows = 0;
  std::vector<std::size_t> source_rows;
  std::optional<CovarianceEstimate> covariance;
  std::uint64_t seed = 0;
  FitConfig config;

  /// Throws InvalidArgument for an unknown label name.
  double effect(const std::string& name) const;
  std::size_t label_index(const std::string& name) const;
};

/// Throws MethodModelMismatch when the method does not cover the model.
void check_method_model(const ModelSpec& spec, Method method);

/// Per-equation seeds are split from `seed` by equation index.
MediationFit fit_mediation(const ModelSpec& spec, const DesignBundle& data, Method method,
                           const FitConfig& cfg, std::uint64_t seed);

/// Only the per-equation coefficient vectors; shared by refitting bootstraps
/// and the jackknife.
std::vector<Vector> fit_coefficients(const ModelSpec& spec, const DesignBundle& data,
                                     Method method, const FitConfig& cfg, std::uint64_t seed);

std::uint64_t equation_seed(std::uint64_t seed, std::size_t equation);

/// Estimator settings (tunings, tolerances, iteration caps) as reported.
nlohmann::json to_json(const FitConfig& cfg);
FitConfig fit_config_from_json(const nlohmann::json& j);

nlohmann::json fit_to_json(const MediationFit& fit, bool include_data);
MediationFit fit_from_json(const nlohmann::json& j);

}  // namespace frbmed
