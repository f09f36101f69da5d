#ifndef CITEQUANT_QUANTILE_FIT_HPP
#define CITEQUANT_QUANTILE_FIT_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "citequant/model.hpp"

namespace citequant {

enum class ColumnRole { intercept, log_if, log_c1 };

// Row-major n x m design with the log-transformed response. Columns are
// [intercept, ln(max(IF, if_floor)), ln(c1 + k0)] restricted to the variant.
struct DesignMatrix {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> x;  // n * m, row major
  std::vector<double> y;  // ln(c_future + response_offset)
  std::vector<ColumnRole> roles;
  std::int64_t n_if_floored = 0;

  double* row(std::size_t i) { return x.data() + i * m; }
  const double* row(std::size_t i) const { return x.data() + i * m; }
};

DesignMatrix build_design(std::span<const PublicationRecord> records,
                          const ModelSpec& spec);
DesignMatrix build_design(std::span<const NormalizedRecord> records,
                          const ModelSpec& spec);

// Drops covariate columns that are constant or collinear with the columns
// before them (tolerance on the normalized Gram pivot), so that constant
// cohorts still fit with the redundant coefficients pinned to zero.
// active[j] marks kept columns of the input design.
struct ReducedDesign {
  DesignMatrix design;
  std::vector<bool> active;
};

ReducedDesign reduce_design(const DesignMatrix& design);

// Check loss rho_p(z) = z * (p - [z < 0]) summed over residuals.
// Throws InvalidProbability unless 0 < p < 1.
double pinball_loss(double p, std::span<const double> residuals);

struct FitOptions {
  double tolerance = 1e-9;
  int max_iterations = 10000;
  int threads = 1;        // grid evaluation only; results identical for any value
  int verbosity = 0;      // 1: per-quantile summary, 2: solver iterations
  std::ostream* log = nullptr;
};

struct SingleQuantileFit {
  std::vector<double> xi;  // one coefficient per design column
  double loss = 0.0;
  double coverage = 0.0;   // fraction of rows with y strictly below the plane
  std::int64_t n_zero_residuals = 0;
  int iterations = 0;
};

// Minimizes sum_i rho_p(y_i - x_i xi) through the bounded-variable dual
// linear program, solved with a predictor-corrector interior point method
// and a final pivot onto an interpolating vertex. Throws DegenerateDesign
// for rank-deficient or undersized designs and NonConvergence when the
// iteration cap is hit.
SingleQuantileFit fit_single_quantile(const DesignMatrix& design, double p,
                                      const FitOptions& options = {});

// Fits every grid quantile independently. Column reduction is applied once;
// dropped coefficients come back as exact zeros.
FittedQuantileModel fit_grid(std::span<const PublicationRecord> records,
                             const ModelSpec& spec,
                             const FitOptions& options = {});

// Normalized variant; the resulting model carries the constants used.
FittedQuantileModel fit_grid(std::span<const NormalizedRecord> records,
                             const ModelSpec& spec,
                             const NormalizationConstants& constants,
                             const FitOptions& options = {});

struct K0Candidate {
  double k0 = 0.0;
  double objective = 0.0;  // sum over grid of (coverage - p)^2
};

struct K0Selection {
  double best_k0 = 0.0;
  std::vector<K0Candidate> candidates;  // ascending k0
};

std::vector<double> default_k0_candidates();  // 0.1 .. 2.0 step 0.1

// Refits the whole grid for every candidate and keeps the k0 whose training
// coverage tracks p most closely; ties go to the smaller k0.
K0Selection select_k0(std::span<const PublicationRecord> records,
                      const ModelSpec& spec, std::span<const double> candidates,
                      const FitOptions& options = {});

}  // namespace citequant

#endif  // CITEQUANT_QUANTILE_FIT_HPP
