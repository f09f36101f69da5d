#include "citequant/tail.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "citequant/errors.hpp"

namespace citequant {

namespace {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void check_descending(std::span<const double> sorted_desc) {
  if (!std::is_sorted(sorted_desc.begin(), sorted_desc.end(),
                      std::greater<double>())) {
    // equal neighbours are fine; is_sorted(greater) accepts them
    throw DegenerateSample("sample must be sorted in descending order");
  }
}

void check_positive_top(std::span<const double> sorted_desc, std::int64_t k) {
  if (sorted_desc[static_cast<std::size_t>(k)] <= 0.0) {
    throw NonPositiveSample("order statistic " + std::to_string(k) +
                            " from the top is not positive");
  }
}

// gamma_hat and the bias-adjusted error proxy at one k, by direct summation.
// Z_j = j (ln X_(n-j+1,n) - ln X_(n-j,n)) regressed on j/(k+1) gives the bias
// coefficient; amse = gamma^2/k + (b/2)^2.
void hill_at(std::span<const double> desc, std::int64_t k, double* gamma_out,
             double* amse_out) {
  const double log_thresh = std::log(desc[static_cast<std::size_t>(k)]);
  double sum = 0.0;
  for (std::int64_t i = 0; i < k; ++i) {
    sum += std::log(desc[static_cast<std::size_t>(i)]) - log_thresh;
  }
  const double gamma = sum / static_cast<double>(k);

  double b_hat = 0.0;
  if (k >= 2) {
    const double kd = static_cast<double>(k);
    double s_tz = 0.0, s_z = 0.0;
    for (std::int64_t j = 1; j <= k; ++j) {
      double zj = static_cast<double>(j) *
                  (std::log(desc[static_cast<std::size_t>(j - 1)]) -
                   std::log(desc[static_cast<std::size_t>(j)]));
      s_z += zj;
      s_tz += (static_cast<double>(j) / (kd + 1.0)) * zj;
    }
    const double s_t = kd / 2.0;
    const double s_tt = kd * (2.0 * kd + 1.0) / (6.0 * (kd + 1.0));
    const double denom = s_tt - s_t * s_t / kd;
    if (denom > 0.0) b_hat = (s_tz - s_t * s_z / kd) / denom;
  }
  *gamma_out = gamma;
  *amse_out = gamma * gamma / static_cast<double>(k) + (b_hat / 2.0) * (b_hat / 2.0);
}

}  // namespace

TailEstimate hill_estimate(std::span<const double> sorted_desc, std::int64_t k) {
  const std::int64_t n = static_cast<std::int64_t>(sorted_desc.size());
  if (k < 1 || k >= n) {
    throw InvalidThreshold("k = " + std::to_string(k) +
                           " outside [1, n-1] with n = " + std::to_string(n));
  }
  check_descending(sorted_desc);
  check_positive_top(sorted_desc, k);

  TailEstimate est;
  hill_at(sorted_desc, k, &est.gamma_hill, &est.amse_proxy);
  est.alpha = est.gamma_hill > 0.0
                  ? 1.0 / est.gamma_hill
                  : std::numeric_limits<double>::infinity();
  est.k = k;
  est.n = n;
  est.p_star = 1.0 - static_cast<double>(k) / static_cast<double>(n);
  est.threshold_value = sorted_desc[static_cast<std::size_t>(k)];
  return est;
}

std::vector<HillScanPoint> hill_scan(std::span<const double> sorted_desc,
                                     std::int64_t k_min, std::int64_t k_max) {
  const std::int64_t n = static_cast<std::int64_t>(sorted_desc.size());
  if (k_min < 1 || k_min > k_max || k_max >= n) {
    throw InvalidThreshold("k range [" + std::to_string(k_min) + ", " +
                           std::to_string(k_max) + "] invalid for n = " +
                           std::to_string(n));
  }
  check_descending(sorted_desc);
  check_positive_top(sorted_desc, k_max);

  // Prefix sums over Z_j make every k an O(1) lookup:
  //   gamma(k) = (1/k) sum_{j<=k} Z_j   (telescoping identity)
  //   slope(k) needs sum Z_j and sum j Z_j.
  const std::size_t km = static_cast<std::size_t>(k_max);
  std::vector<double> logs(km + 1);
  for (std::size_t i = 0; i <= km; ++i) logs[i] = std::log(sorted_desc[i]);
  std::vector<double> pref_z(km + 1, 0.0), pref_jz(km + 1, 0.0);
  for (std::size_t j = 1; j <= km; ++j) {
    double zj = static_cast<double>(j) * (logs[j - 1] - logs[j]);
    pref_z[j] = pref_z[j - 1] + zj;
    pref_jz[j] = pref_jz[j - 1] + static_cast<double>(j) * zj;
  }

  std::vector<HillScanPoint> scan;
  scan.reserve(static_cast<std::size_t>(k_max - k_min + 1));
  for (std::int64_t k = k_min; k <= k_max; ++k) {
    const double kd = static_cast<double>(k);
    const std::size_t ks = static_cast<std::size_t>(k);
    HillScanPoint pt;
    pt.k = k;
    pt.gamma_hat = pref_z[ks] / kd;
    double b_hat = 0.0;
    if (k >= 2) {
      const double s_t = kd / 2.0;
      const double s_tt = kd * (2.0 * kd + 1.0) / (6.0 * (kd + 1.0));
      const double s_z = pref_z[ks];
      const double s_tz = pref_jz[ks] / (kd + 1.0);
      const double denom = s_tt - s_t * s_t / kd;
      if (denom > 0.0) b_hat = (s_tz - s_t * s_z / kd) / denom;
    }
    pt.amse_proxy =
        pt.gamma_hat * pt.gamma_hat / kd + (b_hat / 2.0) * (b_hat / 2.0);
    scan.push_back(pt);
  }
  return scan;
}

TailEstimate select_threshold(std::span<const double> sorted_desc,
                              std::int64_t k_min, std::int64_t k_max,
                              std::vector<HillScanPoint>* scan_out) {
  std::vector<HillScanPoint> scan = hill_scan(sorted_desc, k_min, k_max);
  std::int64_t best_k = scan.front().k;
  double best_amse = scan.front().amse_proxy;
  for (const HillScanPoint& pt : scan) {
    if (pt.amse_proxy < best_amse) {
      best_amse = pt.amse_proxy;
      best_k = pt.k;
    }
  }
  if (scan_out) *scan_out = std::move(scan);
  return hill_estimate(sorted_desc, best_k);
}

std::int64_t default_k_min() { return 10; }

std::int64_t default_k_max(std::int64_t n) { return n / 4; }

double pareto_quantile(const TailEstimate& estimate, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidProbability(p);
  if (p < estimate.p_star) throw BelowThreshold(p, estimate.p_star);
  if (p == estimate.p_star) return estimate.threshold_value;
  const double ratio = static_cast<double>(estimate.k) /
                       (static_cast<double>(estimate.n) * (1.0 - p));
  return estimate.threshold_value * std::pow(ratio, estimate.gamma_hill);
}

double hybrid_quantile(const FittedQuantileModel& model,
                       const TailEstimate& estimate, double p,
                       double impact_factor, double c1) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidProbability(p);
  if (p < estimate.p_star) throw BelowThreshold(p, estimate.p_star);

  // Anchor on the grid point nearest to p*; refuse a gap above half the
  // local grid spacing.
  const auto& grid = model.spec.quantile_grid;
  if (grid.empty()) throw InvalidSpec("empty quantile grid");
  std::size_t idx = 0;
  double best_gap = std::fabs(grid[0] - estimate.p_star);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double gap = std::fabs(grid[i] - estimate.p_star);
    if (gap < best_gap) {
      best_gap = gap;
      idx = i;
    }
  }
  if (grid.size() > 1) {
    double step = std::numeric_limits<double>::infinity();
    if (idx > 0) step = std::min(step, grid[idx] - grid[idx - 1]);
    if (idx + 1 < grid.size()) step = std::min(step, grid[idx + 1] - grid[idx]);
    if (best_gap > 0.5 * step) throw UnknownQuantile(estimate.p_star);
  }

  const double anchor = predict_quantile_pre_offset(model, grid[idx],
                                                    impact_factor, c1);
  const double factor =
      std::pow((1.0 - estimate.p_star) / (1.0 - p), estimate.gamma_hill);
  // Extrapolation happens in the fitting response scale; a mean-normalized
  // model is scaled back to counts only at the end.
  const double back =
      model.normalization ? model.normalization->mean_c_future : 1.0;
  return back * std::max(0.0, anchor * factor - model.spec.response_offset);
}

double c_p_proxy(double c_pstar, double p_star, double alpha, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidProbability(p);
  if (!(p_star > 0.0 && p_star < 1.0)) throw InvalidProbability(p_star);
  return c_pstar + (std::log1p(-p_star) - std::log1p(-p)) / alpha;
}

std::string tail_to_json(const TailEstimate& estimate) {
  std::string out = "{\n";
  out += "  \"alpha\": " + fmt_g17(estimate.alpha) + ",\n";
  out += "  \"gamma\": " + fmt_g17(estimate.gamma_hill) + ",\n";
  out += "  \"k\": " + std::to_string(estimate.k) + ",\n";
  out += "  \"n\": " + std::to_string(estimate.n) + ",\n";
  out += "  \"p_star\": " + fmt_g17(estimate.p_star) + ",\n";
  out += "  \"threshold_value\": " + fmt_g17(estimate.threshold_value) + "\n";
  out += "}\n";
  return out;
}

TailEstimate tail_from_json(const std::string& text) {
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    TailEstimate est;
    est.alpha = j.at("alpha").get<double>();
    est.gamma_hill = j.at("gamma").get<double>();
    est.k = j.at("k").get<std::int64_t>();
    est.n = j.at("n").get<std::int64_t>();
    est.p_star = j.at("p_star").get<double>();
    est.threshold_value = j.at("threshold_value").get<double>();
    return est;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, 0, std::string("tail JSON: ") + e.what());
  }
}

void write_hill_scan_csv(const std::string& path,
                         std::span<const HillScanPoint> scan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot open '" + path + "' for writing");
  out << "k,gamma_hat,amse_proxy\n";
  for (const HillScanPoint& pt : scan) {
    out << pt.k << ',' << fmt_short(pt.gamma_hat) << ','
        << fmt_short(pt.amse_proxy) << '\n';
  }
  if (!out) throw Error(ErrorKind::data, "write failed for '" + path + "'");
}

}  // namespace citequant
