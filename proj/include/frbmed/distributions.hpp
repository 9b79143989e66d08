#pragma once

namespace frbmed {

double normal_cdf(double x);
double normal_quantile(double p);
/// Two-sided tail probability 2(1 - Phi(|z|)).
double normal_two_sided_p(double z);

double chi_squared_cdf(double x, double df);
double chi_squared_quantile(double p, double df);

/// Two-sided p-value of a t statistic; falls back to the normal tail for
/// df <= 0 (treated as infinite degrees of freedom).
double student_two_sided_p(double t, double df);

}  // namespace frbmed
