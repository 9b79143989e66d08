// Command line front end: run, retest and diag subcommands.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "frbmed/diagnostics.hpp"
#include "frbmed/error.hpp"
#include "frbmed/replicate_io.hpp"
#include "frbmed/run.hpp"

namespace {

using namespace frbmed;

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

const EquationFit& find_equation(const MediationFit& fit, const std::string& name) {
  if (name.empty()) return fit.equations.back();
  for (const auto& eq : fit.equations) {
    if (eq.design.response == name) return eq;
  }
  fail(ErrorKind::UnknownRegressor, "UnknownRegressor: no equation for response '" + name + "'");
}

std::string default_label(const BootstrapResult& r) {
  for (const auto& l : r.labels) {
    if (l.role == EffectRole::Indirect) return l.name;
  }
  fail(ErrorKind::InvalidArgument, "no indirect effect to plot");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust mediation analysis with the fast and robust bootstrap"};
  app.require_subcommand(1);

  // run ----------------------------------------------------------------------
  RunConfig rc;
  std::string test = "boot", method = "regression", robust, ci = "bca", contrast = "none";
  std::string format = "text", source = "boot", order = "first";
  auto* run = app.add_subcommand("run", "fit a mediation model and test the indirect effect");
  run->add_option("--data", rc.data_path, "CSV file with a header row")->required();
  run->add_option("--model", rc.formula, "model formula, e.g. 'Y ~ m(M) + X'")->required();
  run->add_option("--test", test, "boot or sobel")->capture_default_str();
  run->add_option("--method", method, "regression or covariance")->capture_default_str();
  run->add_option("--robust", robust,
                  "MM, median or none (regression); winsorize or none (covariance)");
  run->add_option("--R", rc.R, "bootstrap replicates")->capture_default_str();
  run->add_option("--level", rc.level, "confidence level")->capture_default_str();
  run->add_option("--ci", ci, "bca or perc")->capture_default_str();
  run->add_option("--contrast", contrast, "none, estimates or absolute")->capture_default_str();
  run->add_option("--contrast-labels", rc.contrast_labels,
                  "indirect effects to pair in contrasts (default: all)");
  run->add_option("--seed", rc.seed, "random seed")->capture_default_str();
  run->add_option("--format", format, "text or json")->capture_default_str();
  run->add_option("--summary-source", source, "boot or data")->capture_default_str();
  run->add_option("--save-replicates", rc.save_replicates, "write replicates for retest/diag");
  run->add_option("--order", order, "Sobel standard error: first or second")
      ->capture_default_str();
  run->add_option("--threads", rc.threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  bool no_jackknife = false;
  run->add_flag("--no-jackknife", no_jackknife, "BCa without acceleration (accel = 0)");

  // retest -------------------------------------------------------------------
  RetestConfig tc;
  std::string rt_ci, rt_contrast, rt_format = "text", rt_source = "boot";
  double rt_level = 0.0;
  std::vector<std::string> rt_labels;
  auto* re = app.add_subcommand("retest", "reanalyze saved replicates with new settings");
  re->add_option("--replicates", tc.replicates_path, "file written by run --save-replicates")
      ->required();
  auto* rt_level_opt = re->add_option("--level", rt_level, "confidence level");
  re->add_option("--ci", rt_ci, "bca or perc");
  re->add_option("--contrast", rt_contrast, "none, estimates or absolute");
  auto* rt_labels_opt = re->add_option("--contrast-labels", rt_labels, "indirect effects to pair");
  re->add_option("--format", rt_format, "text or json")->capture_default_str();
  re->add_option("--summary-source", rt_source, "boot or data")->capture_default_str();

  // diag ---------------------------------------------------------------------
  std::string dg_file, dg_equation, dg_variable, dg_label, dg_format = "csv", dg_part = "path";
  double dg_level = 0.975;
  std::size_t dg_grid = 512;
  auto* diag = app.add_subcommand("diag", "export diagnostic plot data");
  diag->require_subcommand(1);
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--replicates", dg_file, "file written by run --save-replicates")->required();
    sub->add_option("--format", dg_format, "csv or json")->capture_default_str();
  };
  auto* dw = diag->add_subcommand("weight", "robustness weights against the normal reference");
  add_common(dw);
  dw->add_option("--equation", dg_equation, "response of the equation (default: outcome)");
  auto* de = diag->add_subcommand("ellipse", "tolerance ellipse and weighted points");
  add_common(de);
  de->add_option("--equation", dg_equation, "response of the equation (default: outcome)");
  de->add_option("--variable", dg_variable, "regressor on the horizontal axis");
  de->add_option("--level", dg_level, "ellipse quantile level")->capture_default_str();
  de->add_option("--part", dg_part, "CSV part: path or points")->capture_default_str();
  auto* dd = diag->add_subcommand("density", "bootstrap density of an indirect effect");
  add_common(dd);
  dd->add_option("--label", dg_label, "effect label (default: first indirect effect)");
  dd->add_option("--n-grid", dg_grid, "grid points")->capture_default_str();
  auto* dc = diag->add_subcommand("ci", "estimates and intervals of the indirect effects");
  add_common(dc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      rc.test = test_kind_from_string(test);
      rc.method = estimation_kind_from_string(method);
      if (!robust.empty()) rc.robust = robust_kind_from_string(robust);
      rc.ci_type = ci_type_from_string(ci);
      rc.contrast = contrast_mode_from_string(contrast);
      rc.format = output_format_from_string(format);
      rc.summary_source = summary_source_from_string(source);
      rc.sobel_order = sobel_order_from_string(order);
      rc.jackknife = !no_jackknife;
      std::cout << frbmed::run(rc);
    } else if (re->parsed()) {
      if (*rt_level_opt) tc.settings.level = rt_level;
      if (!rt_ci.empty()) tc.settings.ci_type = ci_type_from_string(rt_ci);
      if (!rt_contrast.empty()) tc.settings.contrast = contrast_mode_from_string(rt_contrast);
      if (*rt_labels_opt) tc.settings.contrast_labels = rt_labels;
      tc.format = output_format_from_string(rt_format);
      tc.summary_source = summary_source_from_string(rt_source);
      std::cout << run_retest(tc);
    } else {
      if (dg_format != "csv" && dg_format != "json") {
        fail(ErrorKind::InvalidArgument, "unknown format '" + dg_format + "' (csv, json)");
      }
      const bool json = dg_format == "json";
      const auto result = load_replicates(dg_file);
      if (dw->parsed()) {
        const auto& eq = find_equation(result.fit, dg_equation);
        const auto curves = weight_curve(eq.design.response, eq.fit);
        std::cout << (json ? to_json(curves).dump(2) + "\n" : weight_curve_csv(curves));
      } else if (de->parsed()) {
        const auto& eq = find_equation(result.fit, dg_equation);
        std::string var = dg_variable;
        if (var.empty()) var = eq.design.regressors.at(1);
        const auto e = ellipse_data(eq, var, dg_level);
        if (json) {
          std::cout << to_json(e).dump(2) << '\n';
        } else if (dg_part == "points") {
          std::cout << ellipse_points_csv(e);
        } else if (dg_part == "path") {
          std::cout << ellipse_path_csv(e);
        } else {
          fail(ErrorKind::InvalidArgument, "unknown part '" + dg_part + "' (path, points)");
        }
      } else if (dd->parsed()) {
        const auto d =
            density_grid(result, dg_label.empty() ? default_label(result) : dg_label, dg_grid);
        std::cout << (json ? to_json(d).dump(2) + "\n" : density_csv(d));
      } else {
        const auto rows = ci_table(result);
        std::cout << (json ? to_json(rows).dump(2) + "\n" : ci_csv(rows));
      }
    }
  } catch (const Error& e) {
    std::string msg = one_line(e.what());
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    std::cerr << "frbmed: error[" << to_string(e.kind()) << "]: " << msg << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "frbmed: error[NumericFailure]: " << one_line(e.what()) << '\n';
    return 4;
  }
  return 0;
}
