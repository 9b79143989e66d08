#include "frbmed/run.hpp"

#include "frbmed/error.hpp"
#include "frbmed/replicate_io.hpp"

namespace frbmed {

TestKind test_kind_from_string(const std::string& text) {
  if (text == "boot") return TestKind::Boot;
  if (text == "sobel") return TestKind::Sobel;
  fail(ErrorKind::InvalidArgument, "unknown test '" + text + "' (boot, sobel)");
}

EstimationKind estimation_kind_from_string(const std::string& text) {
  if (text == "regression") return EstimationKind::Regression;
  if (text == "covariance") return EstimationKind::Covariance;
  fail(ErrorKind::InvalidArgument, "unknown method '" + text + "' (regression, covariance)");
}

RobustKind robust_kind_from_string(const std::string& text) {
  if (text == "MM" || text == "mm") return RobustKind::MM;
  if (text == "median") return RobustKind::Median;
  if (text == "none" || text == "false") return RobustKind::None;
  if (text == "winsorize") return RobustKind::Winsorize;
  fail(ErrorKind::InvalidArgument,
       "unknown robust option '" + text + "' (MM, median, none, winsorize)");
}

OutputFormat output_format_from_string(const std::string& text) {
  if (text == "text") return OutputFormat::Text;
  if (text == "json") return OutputFormat::Json;
  fail(ErrorKind::InvalidArgument, "unknown format '" + text + "' (text, json)");
}

Method resolve_method(EstimationKind method, std::optional<RobustKind> robust) {
  if (method == EstimationKind::Regression) {
    switch (robust.value_or(RobustKind::MM)) {
      case RobustKind::MM: return Method::RegressionMM;
      case RobustKind::Median: return Method::RegressionMedian;
      case RobustKind::None: return Method::RegressionOLS;
      case RobustKind::Winsorize: break;
    }
    fail(ErrorKind::MethodModelMismatch,
         "MethodModelMismatch: winsorization is only available with the covariance method");
  }
  switch (robust.value_or(RobustKind::Winsorize)) {
    case RobustKind::Winsorize: return Method::CovWinsorized;
    case RobustKind::None: return Method::CovML;
    default: break;
  }
  fail(ErrorKind::MethodModelMismatch,
       "MethodModelMismatch: the covariance method supports robust = winsorize or none");
}

ModelSpec check_run_config(const RunConfig& cfg) {
  const ModelSpec spec = parse_formula(cfg.formula);
  const Method method = resolve_method(cfg.method, cfg.robust);
  check_method_model(spec, method);
  if (cfg.test == TestKind::Sobel) {
    if (!spec.simple()) {
      fail(ErrorKind::MethodModelMismatch,
           "MethodModelMismatch: the Sobel test is available for simple mediation only");
    }
    if (cfg.contrast != ContrastMode::None) {
      fail(ErrorKind::InvalidArgument, "InvalidArgument: contrasts need a bootstrap test");
    }
    if (!cfg.save_replicates.empty()) {
      fail(ErrorKind::InvalidArgument, "InvalidArgument: the Sobel test has no replicates to save");
    }
  } else {
    BootstrapConfig b;
    b.R = cfg.R;
    b.level = cfg.level;
    validate(b);
    if (cfg.contrast != ContrastMode::None) {
      // Fails early with TooFewPaths when there is nothing to contrast.
      contrast_labels(enumerate_effects(spec), cfg.contrast, cfg.contrast_labels);
    }
  }
  return spec;
}

std::string render_boot_report(const BootstrapResult& result, OutputFormat format,
                               SummarySource source) {
  if (format == OutputFormat::Json) return boot_report_json(result, source).dump(2) + "\n";
  return boot_report_text(result, source);
}

std::string run_on_table(const RunConfig& cfg, const DataTable& table) {
  const ModelSpec spec = check_run_config(cfg);
  const Method method = resolve_method(cfg.method, cfg.robust);
  const DesignBundle data = select_variables(spec, table);
  FitConfig fit_cfg;

  if (cfg.test == TestKind::Sobel) {
    const auto fit = fit_mediation(spec, data, method, fit_cfg, cfg.seed);
    const auto sobel = sobel_test(fit, cfg.sobel_order);
    if (cfg.format == OutputFormat::Json) return sobel_report_json(fit, sobel).dump(2) + "\n";
    return sobel_report_text(fit, sobel);
  }

  BootstrapConfig b;
  b.R = cfg.R;
  b.level = cfg.level;
  b.ci_type = cfg.ci_type;
  b.contrast = cfg.contrast;
  b.contrast_labels = cfg.contrast_labels;
  b.seed = cfg.seed;
  b.jackknife = cfg.jackknife;
  const auto result = bootstrap_test(spec, data, method, b, fit_cfg, cfg.threads);
  if (!cfg.save_replicates.empty()) save_replicates(result, cfg.save_replicates);
  return render_boot_report(result, cfg.format, cfg.summary_source);
}

std::string run(const RunConfig& cfg) {
  check_run_config(cfg);
  return run_on_table(cfg, read_csv(cfg.data_path));
}

std::string run_retest(const RetestConfig& cfg) {
  const auto stored = load_replicates(cfg.replicates_path);
  const auto result = retest(stored, cfg.settings);
  return render_boot_report(result, cfg.format, cfg.summary_source);
}

}  // namespace frbmed
