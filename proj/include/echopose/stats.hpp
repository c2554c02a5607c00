#pragma once

#include <vector>

namespace echopose::stats {

double mean(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);  // ddof = 1
double median(std::vector<double> v);

// Welch's unpaired two-sample t-test, two-sided.
struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

TTest welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace echopose::stats
