#include "echopose/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "echopose/errors.hpp"

namespace echopose::stats {

double mean(const std::vector<double>& v) {
  if (v.empty()) throw InsufficientDataError("mean: empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) throw InsufficientDataError("sample_std: need >= 2");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median(std::vector<double> v) {
  if (v.empty()) throw InsufficientDataError("median: empty sample");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TTest welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw InsufficientDataError("welch_t_test: need >= 2 per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double va = sample_std(a) * sample_std(a);
  const double vb = sample_std(b) * sample_std(b);

  TTest r;
  const double se2 = va / na + vb / nb;
  if (se2 <= 0.0) {
    // identical constant samples: no evidence of a difference
    r.t = 0.0;
    r.df = na + nb - 2.0;
    r.p_value = 1.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
  const boost::math::students_t dist(r.df);
  r.p_value = 2.0 * boost::math::cdf(dist, -std::abs(r.t));
  return r;
}

}  // namespace echopose::stats
