#include "empo2/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "empo2/common.hpp"

namespace empo2 {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidArgument("mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double median(std::span<const double> xs) {
  if (xs.empty()) throw InvalidArgument("median of an empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double population_std(std::span<const double> xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

namespace {

double u_statistic(std::span<const double> x, std::span<const double> y) {
  double u = 0.0;
  for (double a : x)
    for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return u;
}

}  // namespace

TestResult mann_whitney_greater(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw InvalidArgument("mann_whitney_greater: empty sample");
  const std::size_t n = x.size() + y.size();
  if (n > 24) throw InvalidArgument("mann_whitney_greater: exact test limited to 24 values");
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const double observed = u_statistic(x, y);

  std::size_t at_least = 0, total = 0;
  std::vector<double> a, b;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != x.size()) continue;
    a.clear();
    b.clear();
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? a : b).push_back(pooled[i]);
    ++total;
    if (u_statistic(a, b) >= observed - 1e-12) ++at_least;
  }
  return {observed, static_cast<double>(at_least) / static_cast<double>(total)};
}

TestResult paired_permutation_greater(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty())
    throw InvalidArgument("paired_permutation_greater: samples must be non-empty and paired");
  if (x.size() > 24) throw InvalidArgument("paired_permutation_greater: at most 24 pairs");
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  double observed = 0.0;
  for (double v : d) observed += v;

  std::size_t at_least = 0;
  const std::uint32_t patterns = 1u << d.size();
  for (std::uint32_t mask = 0; mask < patterns; ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += (mask >> i) & 1u ? -d[i] : d[i];
    if (s >= observed - 1e-12) ++at_least;
  }
  return {observed / static_cast<double>(d.size()),
          static_cast<double>(at_least) / static_cast<double>(patterns)};
}

}  // namespace empo2
