#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "affwords/common.hpp"

namespace affwords {

// Probability vector over the Action values, entering BN inference as a
// likelihood factor.
class SoftActionEvidence {
 public:
  static constexpr double tolerance = 1e-12;

  SoftActionEvidence() = default;

  explicit SoftActionEvidence(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) fail(ErrorKind::invalid_argument, "empty soft evidence");
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w))
        fail(ErrorKind::invalid_argument, "soft evidence entries must be finite and >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > tolerance)
      fail(ErrorKind::invalid_argument,
           "soft evidence sums to " + format_double(sum, 17) + ", expected 1");
  }

  static SoftActionEvidence uniform(std::size_t n) {
    return SoftActionEvidence(std::vector<double>(n, 1.0 / double(n)));
  }

  static SoftActionEvidence point_mass(std::size_t n, std::size_t k) {
    std::vector<double> w(n, 0.0);
    w.at(k) = 1.0;
    return SoftActionEvidence(std::move(w));
  }

  // `p` on the target, the remainder split equally over the other values.
  static SoftActionEvidence confidence(std::size_t n, std::size_t target, double p) {
    if (n < 2 || target >= n || !(p >= 0.0 && p <= 1.0))
      fail(ErrorKind::invalid_argument, "invalid confidence parameters");
    std::vector<double> w(n, (1.0 - p) / double(n - 1));
    w[target] = p;
    return SoftActionEvidence(std::move(w));
  }

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

// Normalizes per-class log-likelihoods into a posterior under a uniform prior.
inline SoftActionEvidence posterior_from_loglik(const std::vector<double>& logliks) {
  if (logliks.empty()) fail(ErrorKind::invalid_argument, "no likelihoods to normalize");
  double hi = neg_inf;
  for (double l : logliks) {
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity())
      fail(ErrorKind::invalid_argument, "log-likelihood is NaN or +inf");
    hi = std::max(hi, l);
  }
  if (hi == neg_inf)
    fail(ErrorKind::invalid_argument, "all log-likelihoods are -inf: unscoreable input");
  std::vector<double> w(logliks.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = logliks[i] == neg_inf ? 0.0 : std::exp(logliks[i] - hi);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return SoftActionEvidence(std::move(w));
}

}  // namespace affwords
