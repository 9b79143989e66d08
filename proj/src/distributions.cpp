#include "frbmed/distributions.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>

namespace frbmed {

namespace bm = boost::math;

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return bm::quantile(bm::normal_distribution<double>(), p);
}

double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double chi_squared_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  return bm::cdf(bm::chi_squared_distribution<double>(df), x);
}

double chi_squared_quantile(double p, double df) {
  return bm::quantile(bm::chi_squared_distribution<double>(df), p);
}

double student_two_sided_p(double t, double df) {
  if (!(df > 0.0) || std::isinf(df)) return normal_two_sided_p(t);
  return 2.0 * bm::cdf(bm::complement(bm::students_t_distribution<double>(df),
                                      std::abs(t)));
}

}  // namespace frbmed
