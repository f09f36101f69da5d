#ifndef CITEQUANT_TAIL_HPP
#define CITEQUANT_TAIL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "citequant/model.hpp"

namespace citequant {

// Power-law tail summary: P(X > x) ~ w x^{-alpha} above the threshold, which
// is the (k+1)-th largest observation, i.e. the empirical p*-quantile with
// p* = 1 - k/n.
struct TailEstimate {
  double alpha = 0.0;
  double gamma_hill = 0.0;  // 1 / alpha
  std::int64_t k = 0;
  std::int64_t n = 0;
  double p_star = 0.0;
  double threshold_value = 0.0;
  double amse_proxy = 0.0;
};

// Hill estimator on a descending positive sample:
//   gamma_hat = (1/k) sum_{i=0}^{k-1} (ln X_(n-i,n) - ln X_(n-k,n)).
// Throws InvalidThreshold unless 1 <= k < n and NonPositiveSample when any of
// the top k+1 order statistics is <= 0.
TailEstimate hill_estimate(std::span<const double> sorted_desc, std::int64_t k);

struct HillScanPoint {
  std::int64_t k = 0;
  double gamma_hat = 0.0;
  double amse_proxy = 0.0;
};

// Hill estimates with an asymptotic mean-squared-error proxy for every k in
// [k_min, k_max]. The bias coefficient comes from the least-squares fit of the
// scaled log spacings Z_j = j (ln X_(n-j+1,n) - ln X_(n-j,n)) on (j/(k+1)),
// i.e. the exponential regression model with second-order index fixed at -1:
//   amse(k) = gamma_hat(k)^2 / k + (b_hat(k) / 2)^2.
std::vector<HillScanPoint> hill_scan(std::span<const double> sorted_desc,
                                     std::int64_t k_min, std::int64_t k_max);

// k (equivalently p* = 1 - k/n) minimizing the proxy above; ties keep the
// smaller k. Pass k_min = k_max to pin the threshold. The scan used for the
// decision is copied to *scan_out when provided.
TailEstimate select_threshold(std::span<const double> sorted_desc,
                              std::int64_t k_min, std::int64_t k_max,
                              std::vector<HillScanPoint>* scan_out = nullptr);

std::int64_t default_k_min();
std::int64_t default_k_max(std::int64_t n);

// Unconditional tail extrapolation
//   q(p) = X_(n-k,n) * (k / (n (1-p)))^{1/alpha},  p >= p*.
// Returns the threshold value exactly at p = p*; throws BelowThreshold for
// p < p* and InvalidProbability at p >= 1.
double pareto_quantile(const TailEstimate& estimate, double p);

// Conditional tail extrapolation anchored on the regression quantile at p*:
//   q(p | IF, c1) = ((1-p*)/(1-p))^{1/alpha} * q_hat(p* | IF, c1)
// where q_hat is the pre-offset regression quantile; the response offset is
// re-applied only for the final count-space value. The anchor level is the
// grid point nearest to p*; a gap above half the local grid step throws
// UnknownQuantile.
double hybrid_quantile(const FittedQuantileModel& model,
                       const TailEstimate& estimate, double p,
                       double impact_factor, double c1);

// Tail extension of the intercept track:
//   C_hat_p = C_pstar + (1/alpha) (ln(1-p*) - ln(1-p)).
// Throws InvalidProbability unless 0 < p < 1.
double c_p_proxy(double c_pstar, double p_star, double alpha, double p);

std::string tail_to_json(const TailEstimate& estimate);
TailEstimate tail_from_json(const std::string& text);

void write_hill_scan_csv(const std::string& path,
                         std::span<const HillScanPoint> scan);

}  // namespace citequant

#endif  // CITEQUANT_TAIL_HPP
