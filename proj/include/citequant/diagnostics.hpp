#ifndef CITEQUANT_DIAGNOSTICS_HPP
#define CITEQUANT_DIAGNOSTICS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "citequant/model.hpp"

namespace citequant {

// Zenga inequality curve Z(u) = 1 - Q-(u)/Q+(u), where Q-(u) and Q+(u) are
// the means of the empirical quantile function below and above u. The
// integrals are exact: the observation straddling u contributes fractionally.
// Throws DegenerateSample for an empty sample, a non-positive mean, or a zero
// upper mean at some grid point.
std::vector<std::pair<double, double>> zenga_curve(
    std::span<const double> sample, std::span<const double> grid);

std::vector<double> default_zenga_grid();  // 0.01 .. 0.99 step 0.01

// Second differences of Z must stay above -epsilon on the upper half of the
// grid; heavy Pareto-like tails satisfy this, lognormal-like bodies do not.
bool zenga_convex_upper_half(
    std::span<const std::pair<double, double>> curve, double epsilon = 1e-3);

struct CalibrationPoint {
  double p = 0.0;
  double f = 0.0;  // fraction of records with c_future strictly below q(p)
};

struct CalibrationReport {
  std::vector<CalibrationPoint> points;
  double sum_squared_error = 0.0;  // sum over grid of (f - p)^2
};

// Empirical coverage of every grid quantile. With monotonize the running-
// maximum predictions are used, which makes f non-decreasing in p.
CalibrationReport calibration_curve(const FittedQuantileModel& model,
                                    std::span<const PublicationRecord> records,
                                    bool monotonize = true);
CalibrationReport calibration_curve(const FittedQuantileModel& model,
                                    std::span<const NormalizedRecord> records,
                                    bool monotonize = true);

// Publications sharing (impact factor rounded to halves, c1).
struct PublicationGroup {
  double if_bucket = 0.0;
  std::int64_t c1 = 0;
  std::vector<std::string> members;
  std::vector<std::int64_t> member_c_future;
  std::size_t size = 0;
};

double if_bucket_of(double impact_factor);

// Groups sorted by (if_bucket, c1); groups smaller than min_size are dropped.
// Every record lands in exactly one group before the size filter.
std::vector<PublicationGroup> group_records(
    std::span<const PublicationRecord> records, std::size_t min_size);

struct GroupQuantileRow {
  double if_bucket = 0.0;
  std::int64_t c1 = 0;
  std::size_t size = 0;
  double predicted_q = 0.0;  // model at the bucket covariates
  double empirical_q = 0.0;  // inf{y : F_group(y) >= p}
};

std::vector<GroupQuantileRow> group_quantile_comparison(
    const FittedQuantileModel& model, std::span<const PublicationGroup> groups,
    double p);

// Smallest sample value with rank >= ceil(n p); the inf convention.
double empirical_quantile(std::span<const double> sample, double p);

struct HeatmapCell {
  double if_bucket = 0.0;
  std::int64_t c1 = 0;
  std::size_t size = 0;
  double delta = 0.0;  // within-cell coverage minus p
};

// Per-cell miscalibration f - p at one quantile level. Cells below min_size
// are dropped; records keep their own covariates for the prediction, the
// bucket is only the grouping key.
std::vector<HeatmapCell> coverage_heatmap(
    const FittedQuantileModel& model,
    std::span<const PublicationRecord> records, double p,
    std::size_t min_size = 1);

// -- artifact writers (fixed headers, LF line endings) -----------------------

void write_zenga_csv(const std::string& path,
                     std::span<const std::pair<double, double>> curve);
void write_calibration_csv(const std::string& path,
                           const CalibrationReport& report);
void write_groups_csv(const std::string& path,
                      std::span<const GroupQuantileRow> rows);
void write_heatmap_csv(const std::string& path,
                       std::span<const HeatmapCell> cells);

}  // namespace citequant

#endif  // CITEQUANT_DIAGNOSTICS_HPP
