#pragma once

#include <string>

#include "frbmed/bootstrap.hpp"
#include "json.hpp"

namespace frbmed {

/// Which estimates fill the coefficient tables of a bootstrap report:
/// bootstrap z-tests, or the classical tests of the fit on the data.
enum class SummarySource { Boot, Data };

const char* to_string(SummarySource source);
SummarySource summary_source_from_string(const std::string& text);

struct CoefficientRow {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double statistic = 0.0;
  double p = 1.0;
};

/// Classical tests from the fitted coefficient covariance: t with the
/// residual degrees of freedom for regressions, normal for covariance fits.
std::vector<CoefficientRow> data_coefficient_table(const EquationFit& eq, Method method);

std::string format_sig(double v, int digits = 6);

nlohmann::json boot_report_json(const BootstrapResult& result, SummarySource source);
std::string boot_report_text(const BootstrapResult& result, SummarySource source);

nlohmann::json sobel_report_json(const MediationFit& fit, const SobelResult& sobel);
std::string sobel_report_text(const MediationFit& fit, const SobelResult& sobel);

}  // namespace frbmed
