#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "frbmed/bootstrap.hpp"
#include "frbmed/data_table.hpp"
#include "frbmed/report.hpp"

namespace frbmed {

enum class TestKind { Boot, Sobel };
enum class EstimationKind { Regression, Covariance };
enum class RobustKind { MM, Median, None, Winsorize };
enum class OutputFormat { Text, Json };

TestKind test_kind_from_string(const std::string& text);
EstimationKind estimation_kind_from_string(const std::string& text);
RobustKind robust_kind_from_string(const std::string& text);
OutputFormat output_format_from_string(const std::string& text);

struct RunConfig {
  std::string data_path;
  std::string formula;
  TestKind test = TestKind::Boot;
  EstimationKind method = EstimationKind::Regression;
  /// Unset: MM for regression, winsorization for the covariance matrix.
  std::optional<RobustKind> robust;
  std::size_t R = 5000;
  double level = 0.95;
  CiType ci_type = CiType::BCa;
  ContrastMode contrast = ContrastMode::None;
  std::vector<std::string> contrast_labels;
  std::uint64_t seed = 0;
  OutputFormat format = OutputFormat::Text;
  SummarySource summary_source = SummarySource::Boot;
  std::string save_replicates;
  SobelOrder sobel_order = SobelOrder::First;
  bool jackknife = true;
  unsigned threads = 0;
};

/// Estimator for a (method, robust) pair; throws MethodModelMismatch for
/// combinations that do not exist.
Method resolve_method(EstimationKind method, std::optional<RobustKind> robust);

/// Checks every option and the model/method pairing before any computation.
ModelSpec check_run_config(const RunConfig& cfg);

/// Parse, fit, test and render. The report is returned; replicates are
/// written when requested.
std::string run(const RunConfig& cfg);
std::string run_on_table(const RunConfig& cfg, const DataTable& table);

struct RetestConfig {
  std::string replicates_path;
  RetestSettings settings;
  OutputFormat format = OutputFormat::Text;
  SummarySource summary_source = SummarySource::Boot;
};

std::string run_retest(const RetestConfig& cfg);

std::string render_boot_report(const BootstrapResult& result, OutputFormat format,
                               SummarySource source);

}  // namespace frbmed
