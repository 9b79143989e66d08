#include "frbmed/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "frbmed/diagnostics.hpp"
#include "frbmed/distributions.hpp"
#include "frbmed/error.hpp"

namespace frbmed {

const char* to_string(SummarySource source) {
  return source == SummarySource::Boot ? "boot" : "data";
}

SummarySource summary_source_from_string(const std::string& text) {
  if (text == "boot") return SummarySource::Boot;
  if (text == "data") return SummarySource::Data;
  fail(ErrorKind::InvalidArgument, "unknown summary source '" + text + "' (boot, data)");
}

std::string format_sig(double v, int digits) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::vector<CoefficientRow> data_coefficient_table(const EquationFit& eq, Method method) {
  const auto& fit = eq.fit;
  const double df = fit.residual_df();
  std::vector<CoefficientRow> rows;
  for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
    CoefficientRow r;
    r.name = eq.design.regressors[static_cast<std::size_t>(j)];
    r.estimate = fit.coefficients(j);
    r.std_error = std::sqrt(std::max(fit.covariance(j, j), 0.0));
    r.statistic = r.std_error > 0.0 ? r.estimate / r.std_error
                                    : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(r.statistic)) {
      r.p = std::numeric_limits<double>::quiet_NaN();
    } else if (is_covariance(method)) {
      r.p = normal_two_sided_p(r.statistic);
    } else {
      r.p = student_two_sided_p(r.statistic, df);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

nlohmann::json num(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string format_p(double p) {
  if (std::isnan(p)) return "NA";
  if (p < 2.2e-16) return "<2.2e-16";
  return format_sig(p);
}

std::string stars(double p) {
  if (std::isnan(p)) return "";
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.1) return ".";
  return "";
}

struct TextTable {
  std::vector<std::string> header;  // excluding the row-name column
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> marks;  // significance stars, optional

  void add(const std::string& name, std::vector<std::string> row, std::string mark = {}) {
    names.push_back(name);
    cells.push_back(std::move(row));
    marks.push_back(std::move(mark));
  }

  std::string render() const {
    std::size_t name_w = 0;
    for (const auto& n : names) name_w = std::max(name_w, n.size());
    std::vector<std::size_t> w(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
      w[c] = header[c].size();
      for (const auto& row : cells) w[c] = std::max(w[c], row[c].size());
    }
    const bool any_mark = std::any_of(marks.begin(), marks.end(),
                                      [](const std::string& m) { return !m.empty(); });
    std::ostringstream os;
    os << std::string(name_w, ' ');
    for (std::size_t c = 0; c < header.size(); ++c) {
      os << ' ' << std::string(w[c] - header[c].size(), ' ') << header[c];
    }
    os << '\n';
    for (std::size_t r = 0; r < names.size(); ++r) {
      os << names[r] << std::string(name_w - names[r].size(), ' ');
      for (std::size_t c = 0; c < header.size(); ++c) {
        os << ' ' << std::string(w[c] - cells[r][c].size(), ' ') << cells[r][c];
      }
      if (any_mark && !marks[r].empty()) os << ' ' << marks[r];
      os << '\n';
    }
    return os.str();
  }
};

// Left-aligned two-column listing used for path and contrast legends.
std::string legend(const std::string& second, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.first.size());
  std::ostringstream os;
  os << " Label" << std::string(w - 5, ' ') << ' ' << second << '\n';
  for (const auto& r : rows) {
    os << ' ' << r.first << std::string(w - r.first.size(), ' ') << ' ' << r.second << '\n';
  }
  return os.str();
}

bool is_robust(Method m) {
  return m == Method::RegressionMM || m == Method::RegressionMedian || m == Method::CovWinsorized;
}

std::string via(Method m) {
  return is_covariance(m) ? "the covariance matrix" : "regression";
}

std::string variables_block(const ModelSpec& spec, std::size_t n) {
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
  };
  std::ostringstream os;
  os << "x = " << join(spec.independents) << '\n';
  os << "y = " << spec.dependent << '\n';
  os << "m = " << join(spec.mediators.names) << '\n';
  if (!spec.covariates.empty()) os << "covariates = " << join(spec.covariates) << '\n';
  os << "\nSample size: " << n << '\n';
  return os.str();
}

std::vector<std::size_t> indirect_display_order(const std::vector<EffectLabel>& labels) {
  std::vector<std::size_t> order;
  int max_x = -1;
  for (const auto& l : labels) max_x = std::max(max_x, l.x);
  for (int x = 0; x <= max_x; ++x) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].role == EffectRole::TotalIndirect && labels[i].x == x) order.push_back(i);
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].role == EffectRole::Indirect && labels[i].x == x) order.push_back(i);
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].role == EffectRole::Contrast) order.push_back(i);
  }
  return order;
}

std::size_t count_role(const std::vector<EffectLabel>& labels, EffectRole role) {
  return static_cast<std::size_t>(std::count_if(
      labels.begin(), labels.end(), [&](const EffectLabel& l) { return l.role == role; }));
}

struct EquationSummary {
  double scale = 0.0;
  double df = 0.0;
  RSquared r2;
  bool has_r2 = false;
  std::vector<std::size_t> outliers;  // 1-based observation numbers
  std::vector<double> outlier_weights;
};

EquationSummary summarize_equation(const MediationFit& fit, const EquationFit& eq) {
  EquationSummary s;
  s.scale = eq.fit.scale;
  s.df = eq.fit.residual_df();
  if (eq.fit.residuals.size() > 0 && eq.fit.weights.size() == eq.design.y.size()) {
    try {
      s.r2 = weighted_r_squared(eq.fit, eq.design.y);
      s.has_r2 = true;
    } catch (const Error&) {
      s.has_r2 = false;
    }
  }
  if (eq.fit.method == FitMethod::MM) {
    for (std::size_t i : potential_outliers(eq.fit)) {
      s.outliers.push_back((i < fit.source_rows.size() ? fit.source_rows[i] : i) + 1);
      s.outlier_weights.push_back(eq.fit.weights(static_cast<Eigen::Index>(i)));
    }
  }
  return s;
}

void equation_footer(std::ostringstream& os, const EquationFit& eq, const EquationSummary& s,
                     Method method) {
  const bool mm = eq.fit.method == FitMethod::MM;
  os << '\n';
  if (eq.fit.method == FitMethod::Median) {
    os << "Residual scale (MAD): " << format_sig(s.scale) << " on " << s.df
       << " degrees of freedom\n";
  } else {
    os << (mm ? "Robust residual" : "Residual") << " standard error: " << format_sig(s.scale)
       << " on " << s.df << " degrees of freedom\n";
  }
  if (s.has_r2) {
    if (mm) {
      os << "Robust R-squared:  " << format_sig(s.r2.r2, 4)
         << ",\tAdjusted robust R-squared:  " << format_sig(s.r2.adjusted, 4) << '\n';
    } else if (!is_covariance(method)) {
      os << "R-squared:  " << format_sig(s.r2.r2, 4) << ",\tAdjusted R-squared:  "
         << format_sig(s.r2.adjusted, 4) << '\n';
    }
  }
  if (mm) {
    os << "\nRobustness weights:\n";
    const auto k = s.outliers.size();
    if (k == 0) {
      os << "No potential outliers with weight <= 0.001 detected.\n";
    } else if (k == 1) {
      os << "Observation " << s.outliers[0] << " is a potential outlier with weight "
         << format_sig(s.outlier_weights[0], 2) << '\n';
    } else {
      const double wmax = *std::max_element(s.outlier_weights.begin(), s.outlier_weights.end());
      os << k << " observations are potential outliers with weight <= " << format_sig(wmax, 2)
         << ":\n";
      for (std::size_t i = 0; i < k; ++i) os << (i ? " " : "") << s.outliers[i];
      os << '\n';
    }
  }
}

nlohmann::json equation_summary_json(const EquationSummary& s) {
  nlohmann::json j;
  j["scale"] = num(s.scale);
  j["df"] = s.df;
  if (s.has_r2) {
    j["r_squared"] = num(s.r2.r2);
    j["adjusted_r_squared"] = num(s.r2.adjusted);
  }
  j["potential_outliers"] = s.outliers;
  j["potential_outlier_weights"] = s.outlier_weights;
  return j;
}

std::string test_title(const BootstrapResult& r) {
  const bool several = count_role(r.labels, EffectRole::Indirect) + count_role(r.labels, EffectRole::Contrast) > 1;
  std::string t = is_robust(r.fit.method) ? "Robust bootstrap test" : "Bootstrap test";
  t += several ? "s for indirect effects" : " for indirect effect";
  return t + " via " + via(r.fit.method);
}

}  // namespace

nlohmann::json boot_report_json(const BootstrapResult& result, SummarySource source) {
  const auto& fit = result.fit;
  nlohmann::json j;
  j["test"] = "boot";
  j["title"] = test_title(result);
  j["method"] = to_string(fit.method);
  j["formula"] = render_formula(fit.spec);
  j["model"] = fit.spec;
  j["n"] = fit.n_used;
  j["dropped_rows"] = fit.dropped_rows;
  j["summary_source"] = to_string(source);

  const auto z = boot_z_tests(result);
  auto eqs = nlohmann::json::array();
  for (std::size_t e = 0; e < fit.equations.size(); ++e) {
    const auto& eq = fit.equations[e];
    nlohmann::json je;
    je["response"] = eq.design.response;
    auto coefs = nlohmann::json::array();
    if (source == SummarySource::Boot) {
      for (const auto& t : z.coefficients[e]) {
        coefs.push_back({{"name", t.name}, {"data", num(t.data)}, {"boot", num(t.boot)},
                         {"std_error", num(t.sd)}, {"z", num(t.z)}, {"p", num(t.p)},
                         {"zero_variance", t.zero_variance}});
      }
      const auto w = bootstrap_wald(result, e);
      je["bootstrap_wald"] = {{"statistic", num(w.statistic)}, {"df", w.df}, {"p", num(w.p)}};
    } else {
      for (const auto& r : data_coefficient_table(eq, fit.method)) {
        coefs.push_back({{"name", r.name}, {"estimate", num(r.estimate)},
                         {"std_error", num(r.std_error)}, {"statistic", num(r.statistic)},
                         {"p", num(r.p)}});
      }
    }
    je["coefficients"] = std::move(coefs);
    je["summary"] = equation_summary_json(summarize_equation(fit, eq));
    eqs.push_back(std::move(je));
  }
  j["equations"] = std::move(eqs);

  auto ztests = [&](const std::vector<ZTest>& v) {
    auto arr = nlohmann::json::array();
    for (const auto& t : v) {
      arr.push_back({{"name", t.name}, {"data", num(t.data)}, {"boot", num(t.boot)},
                     {"std_error", num(t.sd)}, {"z", num(t.z)}, {"p", num(t.p)}});
    }
    return arr;
  };
  j["total"] = ztests(z.total);
  j["direct"] = ztests(z.direct);

  auto indirect = nlohmann::json::array();
  for (std::size_t l : indirect_display_order(result.labels)) {
    const auto& lab = result.labels[l];
    const auto& ci = *result.intervals[l];
    indirect.push_back({{"label", lab.name},
                        {"row", lab.row},
                        {"definition", lab.display},
                        {"data", num(result.data_estimates(static_cast<Eigen::Index>(l)))},
                        {"boot", num(result.boot_estimates(static_cast<Eigen::Index>(l)))},
                        {"lower", num(ci.lo)},
                        {"upper", num(ci.hi)},
                        {"degenerate", ci.degenerate},
                        {"acceleration", num(result.acceleration[l])},
                        {"p_value", num(p_value(result, lab.name))}});
  }
  j["indirect"] = std::move(indirect);
  j["level"] = result.config.level;
  j["ci_type"] = to_string(result.config.ci_type);
  j["contrast"] = to_string(result.config.contrast);
  j["R"] = result.config.R;
  j["R_used"] = static_cast<std::size_t>(result.replicates.rows());
  j["discarded"] = result.discarded;
  j["redrawn"] = result.redrawn;
  j["seed"] = result.config.seed;
  j["estimator"] = to_json(result.fit.config);
  return j;
}

std::string boot_report_text(const BootstrapResult& result, SummarySource source) {
  const auto& fit = result.fit;
  const auto& spec = fit.spec;
  std::ostringstream os;
  os << test_title(result) << "\n\n" << variables_block(spec, fit.n_used);

  const auto z = boot_z_tests(result);
  const bool boot = source == SummarySource::Boot;
  const std::string stat = boot || is_covariance(fit.method) ? "z value" : "t value";
  const std::string pcol = boot || is_covariance(fit.method) ? "Pr(>|z|)" : "Pr(>|t|)";

  for (std::size_t e = 0; e < fit.equations.size(); ++e) {
    const auto& eq = fit.equations[e];
    os << "---\nOutcome variable: " << eq.design.response << "\n\nCoefficients:\n";
    TextTable t;
    if (boot) {
      t.header = {"Data", "Boot", "Std. Error", stat, pcol};
      for (const auto& c : z.coefficients[e]) {
        t.add(c.name, {format_sig(c.data), format_sig(c.boot), format_sig(c.sd), format_sig(c.z),
                       format_p(c.p)},
              stars(c.p));
      }
    } else {
      t.header = {"Estimate", "Std. Error", stat, pcol};
      for (const auto& c : data_coefficient_table(eq, fit.method)) {
        t.add(c.name, {format_sig(c.estimate), format_sig(c.std_error), format_sig(c.statistic),
                       format_p(c.p)},
              stars(c.p));
      }
    }
    os << t.render();
    const auto s = summarize_equation(fit, eq);
    equation_footer(os, eq, s, fit.method);
    if (boot) {
      const auto w = bootstrap_wald(result, e);
      os << "Bootstrap Wald chi-squared: " << format_sig(w.statistic, 4) << " on " << w.df
         << " DF,  p-value: " << format_p(w.p) << '\n';
    }
  }

  os << "---\n";
  auto effect_table = [&](const char* title, const std::vector<ZTest>& tests, EffectRole role) {
    os << title << '\n';
    TextTable t;
    if (boot) {
      t.header = {"Data", "Boot", "Std. Error", "z value", "Pr(>|z|)"};
      for (const auto& c : tests) {
        t.add(c.name, {format_sig(c.data), format_sig(c.boot), format_sig(c.sd), format_sig(c.z),
                       format_p(c.p)},
              stars(c.p));
      }
    } else if (role == EffectRole::Direct) {
      // Direct effects are outcome-equation coefficients.
      const auto rows = data_coefficient_table(fit.equations.back(), fit.method);
      t.header = {"Estimate", "Std. Error", stat, pcol};
      for (const auto& c : tests) {
        for (const auto& r : rows) {
          if (r.name != c.name) continue;
          t.add(r.name, {format_sig(r.estimate), format_sig(r.std_error),
                         format_sig(r.statistic), format_p(r.p)},
                stars(r.p));
        }
      }
    } else {
      t.header = {"Estimate", "Std. Error", "z value", "Pr(>|z|)"};
      for (const auto& c : tests) {
        const double zz = c.sd > 0.0 ? c.data / c.sd : 0.0;
        const double p = c.sd > 0.0 ? normal_two_sided_p(zz) : 1.0;
        t.add(c.name, {format_sig(c.data), format_sig(c.sd), format_sig(zz), format_p(p)},
              stars(p));
      }
    }
    os << t.render() << '\n';
  };
  effect_table("Total effect of x on y:", z.total, EffectRole::Total);
  effect_table("Direct effect of x on y:", z.direct, EffectRole::Direct);

  const auto order = indirect_display_order(result.labels);
  os << (order.size() > 1 ? "Indirect effects of x on y:\n" : "Indirect effect of x on y:\n");
  TextTable t;
  t.header = {"Data", "Boot", "Lower", "Upper"};
  for (std::size_t l : order) {
    const auto& ci = *result.intervals[l];
    t.add(result.labels[l].row,
          {format_sig(result.data_estimates(static_cast<Eigen::Index>(l))),
           format_sig(result.boot_estimates(static_cast<Eigen::Index>(l))), format_sig(ci.lo),
           format_sig(ci.hi)});
  }
  os << t.render();

  std::vector<std::pair<std::string, std::string>> paths;
  std::vector<std::pair<std::string, std::string>> contrasts;
  for (std::size_t l : order) {
    const auto& lab = result.labels[l];
    if (lab.role == EffectRole::Indirect && lab.row != lab.display && spec.serial()) {
      paths.emplace_back(lab.row, lab.display);
    }
    if (lab.role == EffectRole::Contrast) contrasts.emplace_back(lab.row, lab.display);
  }
  if (!paths.empty()) os << "\nIndirect effect paths:\n" << legend("Path", paths);
  if (!contrasts.empty()) {
    os << (contrasts.size() > 1 ? "\nIndirect effect contrast definitions:\n"
                                : "\nIndirect effect contrast definition:\n")
       << legend("Definition", contrasts);
  }
  os << "---\nLevel of confidence: " << format_sig(result.config.level * 100.0) << " %\n\n";
  os << "Number of bootstrap replicates: " << result.replicates.rows() << '\n';
  if (result.discarded > 0) {
    os << "(" << result.discarded << " of " << result.config.R
       << " bootstrap samples discarded as not estimable)\n";
  }
  os << "---\nSignif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1\n";
  return os.str();
}

nlohmann::json sobel_report_json(const MediationFit& fit, const SobelResult& sobel) {
  nlohmann::json j;
  j["test"] = "sobel";
  j["method"] = to_string(fit.method);
  j["formula"] = render_formula(fit.spec);
  j["model"] = fit.spec;
  j["n"] = fit.n_used;
  j["dropped_rows"] = fit.dropped_rows;
  j["estimator"] = to_json(fit.config);
  auto eqs = nlohmann::json::array();
  for (const auto& eq : fit.equations) {
    auto coefs = nlohmann::json::array();
    for (const auto& r : data_coefficient_table(eq, fit.method)) {
      coefs.push_back({{"name", r.name}, {"estimate", num(r.estimate)},
                       {"std_error", num(r.std_error)}, {"statistic", num(r.statistic)},
                       {"p", num(r.p)}});
    }
    eqs.push_back({{"response", eq.design.response},
                   {"coefficients", std::move(coefs)},
                   {"summary", equation_summary_json(summarize_equation(fit, eq))}});
  }
  j["equations"] = std::move(eqs);
  j["total"] = num(fit.effect("Total"));
  j["direct"] = num(fit.effect("Direct"));
  j["indirect"] = {{"estimate", num(sobel.estimate)}, {"std_error", num(sobel.std_error)},
                   {"z", num(sobel.z)},          {"p", num(sobel.p)},
                   {"order", to_string(sobel.order)}};
  return j;
}

std::string sobel_report_text(const MediationFit& fit, const SobelResult& sobel) {
  std::ostringstream os;
  os << "Normal theory test for indirect effect via " << via(fit.method) << "\n\n"
     << variables_block(fit.spec, fit.n_used);
  const bool z = is_covariance(fit.method);
  const std::string stat = z ? "z value" : "t value";
  const std::string pcol = z ? "Pr(>|z|)" : "Pr(>|t|)";
  std::vector<CoefficientRow> outcome_rows;
  for (const auto& eq : fit.equations) {
    os << "---\nOutcome variable: " << eq.design.response << "\n\nCoefficients:\n";
    TextTable t;
    t.header = {"Estimate", "Std. Error", stat, pcol};
    outcome_rows = data_coefficient_table(eq, fit.method);
    for (const auto& c : outcome_rows) {
      t.add(c.name, {format_sig(c.estimate), format_sig(c.std_error), format_sig(c.statistic),
                     format_p(c.p)},
            stars(c.p));
    }
    os << t.render();
    equation_footer(os, eq, summarize_equation(fit, eq), fit.method);
  }
  const std::string& x = fit.spec.independents[0];
  os << "---\nTotal effect of x on y:\n";
  TextTable total;
  total.header = {"Estimate"};
  total.add(x, {format_sig(fit.effect("Total"))});
  os << total.render() << "\nDirect effect of x on y:\n";
  TextTable direct;
  direct.header = {"Estimate", "Std. Error", stat, pcol};
  for (const auto& c : outcome_rows) {
    if (c.name == x) {
      direct.add(c.name, {format_sig(c.estimate), format_sig(c.std_error),
                          format_sig(c.statistic), format_p(c.p)},
                 stars(c.p));
    }
  }
  os << direct.render() << "\nIndirect effect of x on y:\n";
  TextTable ind;
  ind.header = {"Data", "Std. Error", "z value", "Pr(>|z|)"};
  ind.add(fit.spec.mediators.names[0], {format_sig(sobel.estimate), format_sig(sobel.std_error),
                                        format_sig(sobel.z), format_p(sobel.p)},
          stars(sobel.p));
  os << ind.render();
  os << "---\nStandard error: " << to_string(sobel.order) << "-order approximation\n";
  os << "---\nSignif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1\n";
  return os.str();
}

}  // namespace frbmed
