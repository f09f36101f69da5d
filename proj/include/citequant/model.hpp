#ifndef CITEQUANT_MODEL_HPP
#define CITEQUANT_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace citequant {

// One publication: journal impact factor at publication time, citations
// accumulated in the first year (c1), and the long-horizon citation count
// c_future that the model predicts quantiles of.
struct PublicationRecord {
  std::string id;
  int cohort_year = 0;
  double impact_factor = 0.0;
  std::int64_t c1 = 0;
  std::int64_t c_future = 0;
};

// Same record after dividing c1 / IF / c_future by cohort means; counts
// become reals, so it is a distinct type rather than a flag on the above.
struct NormalizedRecord {
  std::string id;
  int cohort_year = 0;
  double impact_factor = 0.0;
  double c1 = 0.0;
  double c_future = 0.0;
};

enum class Variant { if_only, c1_only, full };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Cohort means used for cross-cohort transfer. All three must be positive.
struct NormalizationConstants {
  double mean_c1 = 1.0;
  double mean_if = 1.0;
  double mean_c_future = 1.0;
  std::string cohort_label;
  // When false the impact factor is left in its original units and only
  // c1 / c_future are divided by their means.
  bool if_normalized = true;
};

// Values below this floor are substituted before taking ln(IF) so that
// zero-impact-factor venues remain predictable.
inline constexpr double kIfFloor = 0.05;

struct ModelSpec {
  Variant variant = Variant::full;
  double k0 = 0.5;
  double response_offset = 1.0;
  double if_floor = kIfFloor;
  std::vector<double> quantile_grid;  // strictly increasing, all in (0,1)
};

// Throws InvalidSpec when k0 <= 0, response_offset <= 0 or the grid is not
// strictly increasing inside (0,1).
void validate_spec(const ModelSpec& spec);

// Builds {start, start+step, ..., stop} with values snapped to the nearest
// representable decimal so repeated construction is reproducible.
std::vector<double> make_quantile_grid(double start, double stop, double step);
std::vector<double> default_quantile_grid();  // 0.50 .. 0.99 step 0.01

// ln q(p) = C_p + beta_p ln IF + gamma_p ln(c1 + k0); inactive coefficients
// are stored as exact zeros.
struct QuantileCoefficients {
  double p = 0.0;
  double c = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

struct FitDiagnostics {
  double p = 0.0;
  double pinball_loss = 0.0;
  double coverage = 0.0;  // fraction of training records strictly below q(p)
  std::int64_t n_zero_residuals = 0;
};

struct FittedQuantileModel {
  ModelSpec spec;
  std::vector<QuantileCoefficients> coefficients;  // sorted by p, matches grid
  std::optional<NormalizationConstants> normalization;
  std::vector<FitDiagnostics> diagnostics;

  // Index of p in the quantile grid; throws UnknownQuantile when absent.
  std::size_t grid_index(double p) const;
};

// Predicted p-quantile of c_future in count space:
//   max(0, exp(C_p + beta_p ln(max(IF, if_floor)) + gamma_p ln(c1 + k0)) - offset)
// Models fitted on mean-normalized data apply their stored constants here:
// covariates are divided by the fitting cohort's means and the result is
// scaled back by mean_c_future, so callers always pass and receive raw counts.
// Throws UnknownQuantile when p is not a grid point and InvalidCovariate for
// negative or non-finite inputs.
double predict_quantile(const FittedQuantileModel& model, double p,
                        double impact_factor, double c1);

// Evaluates the fitted curve on covariates already expressed in the model's
// fitting scale and leaves the result there, skipping the stored constants.
// Cross-cohort transfer rescales by a different cohort's means and needs this
// entry point; everyone else wants predict_quantile.
double predict_quantile_fit_scale(const FittedQuantileModel& model, double p,
                                  double impact_factor, double c1);

// Same as predict_quantile but before the response offset is subtracted and
// before scaling back to counts; used by the tail extrapolation, which scales
// quantiles multiplicatively in the fitting response scale.
double predict_quantile_pre_offset(const FittedQuantileModel& model, double p,
                                   double impact_factor, double c1);

// All grid quantiles for one covariate pair, made non-decreasing by a running
// maximum over increasing p. Returns (value, p) pairs.
std::vector<std::pair<double, double>> predict_conditional_cdf(
    const FittedQuantileModel& model, double impact_factor, double c1);

// Single value from the monotonized curve above.
double predict_quantile_monotone(const FittedQuantileModel& model, double p,
                                 double impact_factor, double c1);

// -- serialization -----------------------------------------------------------

// Fixed field order, reals rendered with 17 significant digits so that
// write -> read reproduces every coefficient bit for bit.
std::string model_to_json(const FittedQuantileModel& model);
FittedQuantileModel model_from_json(const std::string& text);

void save_model(const std::string& path, const FittedQuantileModel& model);
FittedQuantileModel load_model(const std::string& path);

}  // namespace citequant

#endif  // CITEQUANT_MODEL_HPP
