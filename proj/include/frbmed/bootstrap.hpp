#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "frbmed/mediation.hpp"

namespace frbmed {

enum class CiType { BCa, Percentile };
enum class ContrastMode { None, Estimates, Absolute };

const char* to_string(CiType type);
const char* to_string(ContrastMode mode);
CiType ci_type_from_string(const std::string& text);
ContrastMode contrast_mode_from_string(const std::string& text);

struct BootstrapConfig {
  std::size_t R = 5000;
  double level = 0.95;
  CiType ci_type = CiType::BCa;
  ContrastMode contrast = ContrastMode::None;
  std::uint64_t seed = 0;
  /// Leave-one-out refits for the BCa acceleration; false means accel = 0.
  bool jackknife = true;
  /// Indirect-effect names (or row labels) to pair in contrasts; empty pairs
  /// every individual indirect effect.
  std::vector<std::string> contrast_labels;
};

void validate(const BootstrapConfig& cfg);

/// Index draws of replicate r; attempt > 0 gives the redraw substreams used
/// when a resample cannot be fitted. Indices are 0-based.
std::vector<std::size_t> replicate_indices(std::size_t n, std::uint64_t seed, std::size_t r,
                                           unsigned attempt = 0);

/// First-attempt draws of all R replicates.
std::vector<std::vector<std::size_t>> resample_indices(std::size_t n, std::size_t R,
                                                       std::uint64_t seed);

/// Linear correction of one MM equation, computed once from the original fit.
struct FrbPrecompute {
  Matrix correction;  // K_n
  Vector coefficients;
  double scale = 0.0;
  Vector weights;
  double tuning = kMMTuning;
};

/// K_n = (sum psi'(r_i/s) x_i x_i')^-1 sum w_i x_i x_i'. A zero scale gives
/// K_n = I.
FrbPrecompute frb_precompute(const Matrix& x, const RegressionFit& fit, double tuning);

/// beta + K_n (beta*_WLS - beta) on the resampled rows; the weights of the
/// resampled rows are those of the original observations.
Vector frb_replicate(const Matrix& x, const Vector& y, const std::vector<std::size_t>& idx,
                     const FrbPrecompute& pre);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  /// All replicates equal; the interval collapsed to that value.
  bool degenerate = false;
};

/// Type-7 sample quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);

Interval percentile_interval(const std::vector<double>& replicates, double level);

struct BcaDetail {
  double z0 = 0.0;
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
};

Interval bca_interval(const std::vector<double>& replicates, double theta_hat, double accel,
                      double level, BcaDetail* detail = nullptr);

/// Acceleration from leave-one-out estimates; 0 when they have no spread.
double jackknife_acceleration(const std::vector<double>& loo);

/// Leave-one-out refits of all effects: an n x E matrix with NaN rows for
/// refits that failed.
Matrix jackknife_effects(const ModelSpec& spec, const DesignBundle& data, Method method,
                         const FitConfig& fit_cfg, std::uint64_t seed, unsigned threads);

double jackknife_acceleration(const ModelSpec& spec, const DesignBundle& data, Method method,
                              const std::string& label, const FitConfig& fit_cfg = {},
                              std::uint64_t seed = 0);

struct BootstrapResult {
  BootstrapConfig config;
  MediationFit fit;
  /// Labels of the fitted model followed by any contrasts.
  std::vector<EffectLabel> labels;
  std::size_t base_label_count = 0;
  Matrix replicates;  // R_used x labels
  /// Per equation, R_used x p coefficient replicates.
  std::vector<Matrix> coefficient_replicates;
  /// n x base labels leave-one-out estimates; empty without jackknife.
  Matrix jackknife;
  Vector data_estimates;
  Vector boot_estimates;
  std::vector<double> acceleration;
  std::vector<std::optional<Interval>> intervals;  // indirect labels only
  std::size_t discarded = 0;
  std::size_t redrawn = 0;

  std::size_t label_index(const std::string& name) const;
  std::vector<double> column(std::size_t label) const;
};

/// Fits the model, resamples, evaluates all effects per replicate, then
/// computes intervals. `threads` = 0 uses the hardware concurrency.
BootstrapResult bootstrap_test(const ModelSpec& spec, const DesignBundle& data, Method method,
                               const BootstrapConfig& cfg, const FitConfig& fit_cfg = {},
                               unsigned threads = 0);

/// Rebuilds contrasts, point estimates, accelerations and intervals from the
/// stored replicates and result.config.
void analyze(BootstrapResult& result);

struct RetestSettings {
  std::optional<double> level;
  std::optional<CiType> ci_type;
  std::optional<ContrastMode> contrast;
  std::optional<std::vector<std::string>> contrast_labels;
};

BootstrapResult retest(const BootstrapResult& stored, const RetestSettings& settings);

/// Contrast labels for the given indirect labels; throws TooFewPaths.
std::vector<EffectLabel> contrast_labels(const std::vector<EffectLabel>& base,
                                         ContrastMode mode,
                                         const std::vector<std::string>& subset);

Interval label_interval(const BootstrapResult& result, std::size_t label, double level);

/// Smallest alpha whose (1 - alpha) interval excludes 0, by bisection.
double p_value(const BootstrapResult& result, const std::string& label,
               double precision = 1e-4);

struct ZTest {
  std::string name;
  double data = 0.0;
  double boot = 0.0;
  double sd = 0.0;
  double z = 0.0;
  double p = 1.0;
  bool zero_variance = false;
};

/// Coefficient tables per equation, then total and direct effects.
struct BootZTests {
  std::vector<std::vector<ZTest>> coefficients;
  std::vector<ZTest> total;
  std::vector<ZTest> direct;
};

ZTest z_test_column(const std::string& name, double data, const std::vector<double>& column);
BootZTests boot_z_tests(const BootstrapResult& result);

/// Wald chi-square of the slopes of one equation, using the bootstrap
/// covariance of the slope replicates.
struct WaldTest {
  double statistic = 0.0;
  int df = 0;
  double p = 1.0;
};

WaldTest bootstrap_wald(const BootstrapResult& result, std::size_t equation);

enum class SobelOrder { First, Second };

const char* to_string(SobelOrder order);
SobelOrder sobel_order_from_string(const std::string& text);

struct SobelResult {
  double a = 0.0;
  double b = 0.0;
  double se_a = 0.0;
  double se_b = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  double p = 1.0;
  SobelOrder order = SobelOrder::First;
};

SobelResult sobel_from(double a, double se_a, double b, double se_b, SobelOrder order);
SobelResult sobel_test(const MediationFit& fit, SobelOrder order);

}  // namespace frbmed
