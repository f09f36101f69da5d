#include "citequant/normalize.hpp"

#include <cmath>

#include "citequant/errors.hpp"

namespace citequant {

NormalizationConstants compute_constants(
    std::span<const PublicationRecord> records, const std::string& cohort_label,
    bool normalize_if) {
  if (records.empty()) throw EmptyDataset("cannot compute cohort means");
  long double sum_c1 = 0.0L, sum_if = 0.0L, sum_cf = 0.0L;
  for (const PublicationRecord& rec : records) {
    sum_c1 += static_cast<long double>(rec.c1);
    sum_if += static_cast<long double>(rec.impact_factor);
    sum_cf += static_cast<long double>(rec.c_future);
  }
  const long double n = static_cast<long double>(records.size());
  NormalizationConstants c;
  c.mean_c1 = static_cast<double>(sum_c1 / n);
  c.mean_if = static_cast<double>(sum_if / n);
  c.mean_c_future = static_cast<double>(sum_cf / n);
  c.cohort_label = cohort_label;
  c.if_normalized = normalize_if;
  if (!(c.mean_c1 > 0.0)) throw ZeroMeanColumn("c1");
  if (!(c.mean_if > 0.0)) throw ZeroMeanColumn("impact_factor");
  if (!(c.mean_c_future > 0.0)) throw ZeroMeanColumn("c_future");
  return c;
}

std::vector<NormalizedRecord> normalize_dataset(
    std::span<const PublicationRecord> records,
    const NormalizationConstants& constants) {
  if (!(constants.mean_c1 > 0.0) || !(constants.mean_if > 0.0) ||
      !(constants.mean_c_future > 0.0)) {
    throw ZeroMeanColumn("normalization constants must be positive");
  }
  std::vector<NormalizedRecord> out;
  out.reserve(records.size());
  for (const PublicationRecord& rec : records) {
    NormalizedRecord nr;
    nr.id = rec.id;
    nr.cohort_year = rec.cohort_year;
    nr.impact_factor = constants.if_normalized
                           ? rec.impact_factor / constants.mean_if
                           : rec.impact_factor;
    nr.c1 = static_cast<double>(rec.c1) / constants.mean_c1;
    nr.c_future = static_cast<double>(rec.c_future) / constants.mean_c_future;
    out.push_back(std::move(nr));
  }
  return out;
}

double transfer_predict(const FittedQuantileModel& model,
                        const NormalizationConstants& constants_b, double p,
                        double impact_factor, double c1) {
  if (!model.normalization) throw MissingNormalization();
  if (!(constants_b.mean_c1 > 0.0) || !(constants_b.mean_if > 0.0) ||
      !(constants_b.mean_c_future > 0.0)) {
    throw ZeroMeanColumn("normalization constants must be positive");
  }
  const double nif = model.normalization->if_normalized
                         ? impact_factor / constants_b.mean_if
                         : impact_factor;
  const double nc1 = c1 / constants_b.mean_c1;
  // The curve is evaluated in mean-normalized units throughout; only the
  // final scale-back uses cohort B, so the result is a count in cohort B.
  return constants_b.mean_c_future *
         predict_quantile_fit_scale(model, p, nif, nc1);
}

}  // namespace citequant
