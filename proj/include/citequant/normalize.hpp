#ifndef CITEQUANT_NORMALIZE_HPP
#define CITEQUANT_NORMALIZE_HPP

#include <span>
#include <string>
#include <vector>

#include "citequant/model.hpp"

namespace citequant {

// Arithmetic means of c1, impact factor and c_future. Throws EmptyDataset on
// an empty cohort and ZeroMeanColumn when any mean is not strictly positive.
NormalizationConstants compute_constants(
    std::span<const PublicationRecord> records,
    const std::string& cohort_label = "", bool normalize_if = true);

// Divides each record's fields by the cohort means; with if_normalized unset
// the impact factor passes through unchanged.
std::vector<NormalizedRecord> normalize_dataset(
    std::span<const PublicationRecord> records,
    const NormalizationConstants& constants);

// Prediction for a cohort-B query on a model fitted to normalized cohort-A
// data: the query covariates are divided by cohort B's means and the returned
// quantile is scaled back by cohort B's mean c_future, giving an absolute
// count in cohort B. Throws MissingNormalization when the model was not
// fitted on normalized data.
double transfer_predict(const FittedQuantileModel& model,
                        const NormalizationConstants& constants_b, double p,
                        double impact_factor, double c1);

}  // namespace citequant

#endif  // CITEQUANT_NORMALIZE_HPP
