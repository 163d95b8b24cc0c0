#pragma once

#include <span>

namespace empo2 {

double mean(std::span<const double> xs);
// Average of the two middle values for even sizes.
double median(std::span<const double> xs);
double population_std(std::span<const double> xs);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sided Mann-Whitney U test of H1: x tends to exceed y. U counts pairs
// with x > y plus half the ties. The p-value is exact, by enumerating every
// split of the pooled sample (sizes up to about 12 each).
TestResult mann_whitney_greater(std::span<const double> x, std::span<const double> y);

// One-sided paired sign-flip permutation test of H1: mean(x - y) > 0. Exact
// over all 2^n sign patterns (n <= 24).
TestResult paired_permutation_greater(std::span<const double> x, std::span<const double> y);

}  // namespace empo2
