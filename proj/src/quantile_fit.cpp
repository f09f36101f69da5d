#include "citequant/quantile_fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>
#include <vector>

#include "citequant/errors.hpp"

namespace citequant {

namespace {

constexpr int kMaxCols = 3;

double dot_row(const double* row, const double* w, int m) {
  double s = 0.0;
  for (int j = 0; j < m; ++j) s += row[j] * w[j];
  return s;
}

bool cholesky(int m, const double a[kMaxCols][kMaxCols],
              double l[kMaxCols][kMaxCols]) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (!(s > 0.0)) return false;
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return true;
}

void chol_solve(int m, const double l[kMaxCols][kMaxCols],
                const double r[kMaxCols], double out[kMaxCols]) {
  double t[kMaxCols];
  for (int i = 0; i < m; ++i) {
    double s = r[i];
    for (int k = 0; k < i; ++k) s -= l[i][k] * t[k];
    t[i] = s / l[i][i];
  }
  for (int i = m - 1; i >= 0; --i) {
    double s = t[i];
    for (int k = i + 1; k < m; ++k) s -= l[k][i] * out[k];
    out[i] = s / l[i][i];
  }
}

// Gaussian elimination with partial pivoting; a and b are clobbered.
bool solve_linear(int m, double a[kMaxCols][kMaxCols], double b[kMaxCols],
                  double out[kMaxCols]) {
  int idx[kMaxCols] = {0, 1, 2};
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r) {
      if (std::fabs(a[idx[r]][col]) > std::fabs(a[idx[piv]][col])) piv = r;
    }
    std::swap(idx[col], idx[piv]);
    double d = a[idx[col]][col];
    if (std::fabs(d) < 1e-300) return false;
    for (int r = col + 1; r < m; ++r) {
      double f = a[idx[r]][col] / d;
      a[idx[r]][col] = 0.0;
      for (int c = col + 1; c < m; ++c) a[idx[r]][c] -= f * a[idx[col]][c];
      b[idx[r]] -= f * b[idx[col]];
    }
  }
  for (int col = m - 1; col >= 0; --col) {
    double s = b[idx[col]];
    for (int c = col + 1; c < m; ++c) s -= a[idx[col]][c] * out[c];
    out[col] = s / a[idx[col]][col];
  }
  return true;
}

// Columns that are (numerically) linear combinations of the columns before
// them, found by modified Gram-Schmidt over the n-vectors.
std::vector<bool> dependent_columns(const DesignMatrix& d, double rel_tol) {
  std::vector<bool> dependent(d.m, false);
  std::vector<std::vector<double>> basis;
  for (std::size_t j = 0; j < d.m; ++j) {
    std::vector<double> v(d.n);
    double norm0 = 0.0;
    for (std::size_t i = 0; i < d.n; ++i) {
      v[i] = d.x[i * d.m + j];
      norm0 += v[i] * v[i];
    }
    norm0 = std::sqrt(norm0);
    for (const auto& b : basis) {
      double proj = 0.0;
      for (std::size_t i = 0; i < d.n; ++i) proj += v[i] * b[i];
      for (std::size_t i = 0; i < d.n; ++i) v[i] -= proj * b[i];
    }
    double norm = 0.0;
    for (double vi : v) norm += vi * vi;
    norm = std::sqrt(norm);
    if (norm0 == 0.0 || norm <= rel_tol * norm0) {
      dependent[j] = true;
      continue;
    }
    for (double& vi : v) vi /= norm;
    basis.push_back(std::move(v));
  }
  return dependent;
}

struct SolverState {
  std::array<double, kMaxCols> xi{};
  int iterations = 0;
};

// Predictor-corrector interior point method on the dual
//   min (-y)'x  s.t.  X'x = (1-p) X'1,  0 <= x <= 1,
// whose equality multipliers are the negated regression coefficients.
SolverState interior_point(const DesignMatrix& dm, double p,
                           const FitOptions& opt) {
  const std::size_t n = dm.n;
  const int m = static_cast<int>(dm.m);
  const double tol = opt.tolerance;

  double b[kMaxCols] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = dm.row(i);
    for (int j = 0; j < m; ++j) b[j] += row[j];
  }
  double b_norm = 1.0;
  for (int j = 0; j < m; ++j) {
    b[j] *= (1.0 - p);
    b_norm = std::max(b_norm, std::fabs(b[j]));
  }
  double y_scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) y_scale = std::max(y_scale, std::fabs(dm.y[i]));

  std::vector<double> x(n, 1.0 - p), s(n, p), z(n), q(n);
  std::vector<double> rc(n), ru(n), diag(n), h(n), txz(n), tsq(n);
  std::vector<double> dx(n), ds(n), dz(n), dq(n);
  std::vector<double> dx2(n), ds2(n), dz2(n), dq2(n);
  double w[kMaxCols] = {0, 0, 0};

  {
    // Warm start: w = -OLS coefficients, slacks split around the residual.
    double g[kMaxCols][kMaxCols] = {};
    double r0[kMaxCols] = {0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = dm.row(i);
      for (int j = 0; j < m; ++j) {
        r0[j] -= row[j] * dm.y[i];
        for (int k = 0; k <= j; ++k) g[j][k] += row[j] * row[k];
      }
    }
    for (int j = 0; j < m; ++j)
      for (int k = j + 1; k < m; ++k) g[j][k] = g[k][j];
    double l[kMaxCols][kMaxCols];
    if (cholesky(m, g, l)) chol_solve(m, l, r0, w);
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      delta = std::max(delta, std::fabs(dm.y[i] + dot_row(dm.row(i), w, m)));
    }
    delta = 0.05 * delta + 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = -dm.y[i] - dot_row(dm.row(i), w, m);  // target for z - q
      z[i] = std::max(r, 0.0) + delta;
      q[i] = std::max(-r, 0.0) + delta;
    }
  }

  const double eta = 0.9995;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    double rb[kMaxCols];
    for (int j = 0; j < m; ++j) rb[j] = b[j];
    double gap = 0.0, cx = 0.0;
    double rc_norm = 0.0, rb_norm = 0.0, ru_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = dm.row(i);
      for (int j = 0; j < m; ++j) rb[j] -= row[j] * x[i];
      ru[i] = 1.0 - x[i] - s[i];
      rc[i] = -dm.y[i] - dot_row(row, w, m) - z[i] + q[i];
      gap += x[i] * z[i] + s[i] * q[i];
      cx -= dm.y[i] * x[i];
      rc_norm = std::max(rc_norm, std::fabs(rc[i]));
      ru_norm = std::max(ru_norm, std::fabs(ru[i]));
    }
    for (int j = 0; j < m; ++j) rb_norm = std::max(rb_norm, std::fabs(rb[j]));
    double mu = gap / (2.0 * static_cast<double>(n));
    if (opt.verbosity >= 2 && opt.log) {
      *opt.log << "    iter " << it << " mu " << mu << " rb " << rb_norm
               << " rc " << rc_norm << '\n';
    }
    if (rb_norm <= tol * b_norm && ru_norm <= tol && rc_norm <= tol * y_scale &&
        gap <= tol * (1.0 + std::fabs(cx))) {
      SolverState out;
      for (int j = 0; j < m; ++j) out.xi[j] = -w[j];
      out.iterations = it - 1;
      return out;
    }

    for (std::size_t i = 0; i < n; ++i) {
      double di = z[i] / x[i] + q[i] / s[i];
      diag[i] = 1.0 / std::clamp(di, 1e-30, 1e30);
    }
    double mat[kMaxCols][kMaxCols] = {};
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = dm.row(i);
      for (int j = 0; j < m; ++j)
        for (int k = 0; k <= j; ++k) mat[j][k] += diag[i] * row[j] * row[k];
    }
    for (int j = 0; j < m; ++j)
      for (int k = j + 1; k < m; ++k) mat[j][k] = mat[k][j];
    double l[kMaxCols][kMaxCols];
    {
      bool ok = cholesky(m, mat, l);
      for (int attempt = 0; !ok && attempt < 3; ++attempt) {
        double jitter = 1e-12 * (1.0 + mat[0][0]);
        for (int j = 0; j < m; ++j) mat[j][j] += jitter;
        ok = cholesky(m, mat, l);
      }
      if (!ok) throw NonConvergence("normal matrix lost positive definiteness");
    }

    auto solve_direction = [&](std::vector<double>& ox, std::vector<double>& os,
                               std::vector<double>& oz, std::vector<double>& oq) {
      double rhs[kMaxCols];
      for (int j = 0; j < m; ++j) rhs[j] = rb[j];
      for (std::size_t i = 0; i < n; ++i) {
        h[i] = rc[i] - txz[i] / x[i] + tsq[i] / s[i] - (q[i] / s[i]) * ru[i];
        const double* row = dm.row(i);
        double dh = diag[i] * h[i];
        for (int j = 0; j < m; ++j) rhs[j] += row[j] * dh;
      }
      double dw[kMaxCols];
      chol_solve(m, l, rhs, dw);
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = dm.row(i);
        ox[i] = diag[i] * (dot_row(row, dw, m) - h[i]);
        os[i] = ru[i] - ox[i];
        oz[i] = (txz[i] - z[i] * ox[i]) / x[i];
        oq[i] = (tsq[i] - q[i] * os[i]) / s[i];
      }
      return std::array<double, kMaxCols>{dw[0], m > 1 ? dw[1] : 0.0,
                                          m > 2 ? dw[2] : 0.0};
    };

    auto max_steps = [&](const std::vector<double>& ox,
                         const std::vector<double>& os,
                         const std::vector<double>& oz,
                         const std::vector<double>& oq) {
      double ap = 1.0, ad = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (ox[i] < 0.0) ap = std::min(ap, -x[i] / ox[i]);
        if (os[i] < 0.0) ap = std::min(ap, -s[i] / os[i]);
        if (oz[i] < 0.0) ad = std::min(ad, -z[i] / oz[i]);
        if (oq[i] < 0.0) ad = std::min(ad, -q[i] / oq[i]);
      }
      return std::pair<double, double>{ap, ad};
    };

    // Affine scaling step.
    for (std::size_t i = 0; i < n; ++i) {
      txz[i] = -x[i] * z[i];
      tsq[i] = -s[i] * q[i];
    }
    solve_direction(dx, ds, dz, dq);
    auto [ap_aff, ad_aff] = max_steps(dx, ds, dz, dq);
    double mu_aff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mu_aff += (x[i] + ap_aff * dx[i]) * (z[i] + ad_aff * dz[i]) +
                (s[i] + ap_aff * ds[i]) * (q[i] + ad_aff * dq[i]);
    }
    mu_aff /= 2.0 * static_cast<double>(n);
    double sigma = std::clamp(mu_aff / std::max(mu, 1e-300), 0.0, 1.0);
    sigma = sigma * sigma * sigma;

    // Corrector with centering.
    for (std::size_t i = 0; i < n; ++i) {
      txz[i] = sigma * mu - x[i] * z[i] - dx[i] * dz[i];
      tsq[i] = sigma * mu - s[i] * q[i] - ds[i] * dq[i];
    }
    auto dw = solve_direction(dx2, ds2, dz2, dq2);
    auto [ap_max, ad_max] = max_steps(dx2, ds2, dz2, dq2);
    double ap = std::min(1.0, eta * ap_max);
    double ad = std::min(1.0, eta * ad_max);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += ap * dx2[i];
      s[i] += ap * ds2[i];
      z[i] += ad * dz2[i];
      q[i] += ad * dq2[i];
    }
    for (int j = 0; j < m; ++j) w[j] += ad * dw[j];
  }
  throw NonConvergence("iteration cap reached at tolerance " +
                       std::to_string(tol));
}

// Move from the interior iterate onto the vertex interpolating the m rows
// closest to the plane, kept only when it does not worsen the objective.
void polish_to_vertex(const DesignMatrix& dm, double p,
                      std::array<double, kMaxCols>& xi) {
  const std::size_t n = dm.n;
  const int m = static_cast<int>(dm.m);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    resid[i] = dm.y[i] - dot_row(dm.row(i), xi.data(), m);
  }
  auto loss_of = [&](const std::array<double, kMaxCols>& c) {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = dm.y[i] - dot_row(dm.row(i), c.data(), m);
      loss += r * (r >= 0.0 ? p : p - 1.0);
    }
    return loss;
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double fa = std::fabs(resid[a]), fb = std::fabs(resid[b]);
    if (fa != fb) return fa < fb;
    return a < b;
  });

  // Greedy basis: nearest rows first, skipping rows that are linearly
  // dependent on the ones already taken.
  double basis[kMaxCols][kMaxCols];
  std::size_t rows[kMaxCols] = {};
  int taken = 0;
  for (std::size_t oi = 0; oi < n && taken < m; ++oi) {
    const double* row = dm.row(order[oi]);
    double v[kMaxCols], norm0 = 0.0;
    for (int j = 0; j < m; ++j) {
      v[j] = row[j];
      norm0 += v[j] * v[j];
    }
    for (int t = 0; t < taken; ++t) {
      double proj = 0.0, bn = 0.0;
      for (int j = 0; j < m; ++j) {
        proj += v[j] * basis[t][j];
        bn += basis[t][j] * basis[t][j];
      }
      for (int j = 0; j < m; ++j) v[j] -= (proj / bn) * basis[t][j];
    }
    double norm = 0.0;
    for (int j = 0; j < m; ++j) norm += v[j] * v[j];
    if (norm <= 1e-16 * norm0) continue;
    for (int j = 0; j < m; ++j) basis[taken][j] = v[j];
    rows[taken] = order[oi];
    ++taken;
  }
  if (taken < m) return;

  double a[kMaxCols][kMaxCols];
  double yb[kMaxCols];
  for (int t = 0; t < m; ++t) {
    const double* row = dm.row(rows[t]);
    for (int j = 0; j < m; ++j) a[t][j] = row[j];
    yb[t] = dm.y[rows[t]];
  }
  std::array<double, kMaxCols> cand{};
  if (!solve_linear(m, a, yb, cand.data())) return;

  double before = loss_of(xi);
  double after = loss_of(cand);
  if (after <= before + 1e-9 * (1.0 + std::fabs(before))) xi = cand;
}

template <typename R>
DesignMatrix build_design_impl(std::span<const R> records,
                               const ModelSpec& spec) {
  validate_spec(spec);
  if (records.empty()) throw EmptyDataset("no records to fit");
  const bool use_if = spec.variant != Variant::c1_only;
  const bool use_c1 = spec.variant != Variant::if_only;
  DesignMatrix d;
  d.n = records.size();
  d.roles.push_back(ColumnRole::intercept);
  if (use_if) d.roles.push_back(ColumnRole::log_if);
  if (use_c1) d.roles.push_back(ColumnRole::log_c1);
  d.m = d.roles.size();
  d.x.resize(d.n * d.m);
  d.y.resize(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    const R& rec = records[i];
    const double iff = static_cast<double>(rec.impact_factor);
    const double c1 = static_cast<double>(rec.c1);
    const double cf = static_cast<double>(rec.c_future);
    if (!std::isfinite(iff) || iff < 0.0) {
      throw InvalidCovariate("impact factor of record '" + rec.id + "'");
    }
    if (!std::isfinite(c1) || c1 < 0.0) {
      throw InvalidCovariate("c1 of record '" + rec.id + "'");
    }
    if (!std::isfinite(cf) || cf < 0.0) {
      throw InvalidCovariate("c_future of record '" + rec.id + "'");
    }
    double* row = d.row(i);
    int col = 0;
    row[col++] = 1.0;
    if (use_if) {
      if (iff < spec.if_floor) ++d.n_if_floored;
      row[col++] = std::log(std::max(iff, spec.if_floor));
    }
    if (use_c1) row[col++] = std::log(c1 + spec.k0);
    d.y[i] = std::log(cf + spec.response_offset);
  }
  return d;
}

struct CoefficientMap {
  // position of each full-design column in the reduced design, or -1
  std::array<int, kMaxCols> position;
};

QuantileCoefficients map_coefficients(const DesignMatrix& full,
                                      const ReducedDesign& reduced,
                                      const std::vector<double>& xi, double p) {
  QuantileCoefficients out;
  out.p = p;
  std::size_t pos = 0;
  for (std::size_t j = 0; j < full.m; ++j) {
    if (!reduced.active[j]) continue;
    double value = xi.at(pos++);
    switch (full.roles[j]) {
      case ColumnRole::intercept: out.c = value; break;
      case ColumnRole::log_if: out.beta = value; break;
      case ColumnRole::log_c1: out.gamma = value; break;
    }
  }
  return out;
}

template <typename R>
FittedQuantileModel fit_grid_impl(std::span<const R> records,
                                  const ModelSpec& spec,
                                  const FitOptions& options) {
  DesignMatrix full = build_design_impl(records, spec);
  if (full.n < full.m) {
    throw DegenerateDesign("dataset smaller than the number of model columns");
  }
  ReducedDesign reduced = reduce_design(full);

  FittedQuantileModel model;
  model.spec = spec;
  const std::size_t np = spec.quantile_grid.size();
  model.coefficients.resize(np);
  model.diagnostics.resize(np);

  auto fit_one = [&](std::size_t gi) {
    const double p = spec.quantile_grid[gi];
    FitOptions local = options;
    local.threads = 1;
    SingleQuantileFit fit = fit_single_quantile(reduced.design, p, local);
    model.coefficients[gi] = map_coefficients(full, reduced, fit.xi, p);
    model.diagnostics[gi] = {p, fit.loss, fit.coverage, fit.n_zero_residuals};
    if (options.verbosity >= 1 && options.log) {
      *options.log << "  p " << p << " loss " << fit.loss << " coverage "
                   << fit.coverage << " iters " << fit.iterations << '\n';
    }
  };

  int threads = std::max(1, options.threads);
  if (threads == 1 || np < 2) {
    for (std::size_t gi = 0; gi < np; ++gi) fit_one(gi);
  } else {
    threads = static_cast<int>(std::min<std::size_t>(threads, np));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t]() {
        try {
          for (std::size_t gi = t; gi < np; gi += threads) fit_one(gi);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return model;
}

}  // namespace

DesignMatrix build_design(std::span<const PublicationRecord> records,
                          const ModelSpec& spec) {
  return build_design_impl(records, spec);
}

DesignMatrix build_design(std::span<const NormalizedRecord> records,
                          const ModelSpec& spec) {
  return build_design_impl(records, spec);
}

ReducedDesign reduce_design(const DesignMatrix& design) {
  std::vector<bool> dependent = dependent_columns(design, 1e-10);
  ReducedDesign out;
  out.active.resize(design.m);
  std::size_t kept = 0;
  for (std::size_t j = 0; j < design.m; ++j) {
    out.active[j] = !dependent[j];
    if (out.active[j]) ++kept;
  }
  if (kept == design.m) {
    out.design = design;
    return out;
  }
  DesignMatrix r;
  r.n = design.n;
  r.m = kept;
  r.y = design.y;
  r.n_if_floored = design.n_if_floored;
  r.x.resize(r.n * r.m);
  for (std::size_t j = 0; j < design.m; ++j) {
    if (out.active[j]) r.roles.push_back(design.roles[j]);
  }
  for (std::size_t i = 0; i < design.n; ++i) {
    const double* src = design.row(i);
    double* dst = r.row(i);
    std::size_t col = 0;
    for (std::size_t j = 0; j < design.m; ++j) {
      if (out.active[j]) dst[col++] = src[j];
    }
  }
  out.design = std::move(r);
  return out;
}

double pinball_loss(double p, std::span<const double> residuals) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidProbability(p);
  double loss = 0.0;
  for (double r : residuals) loss += r * (r >= 0.0 ? p : p - 1.0);
  return loss;
}

SingleQuantileFit fit_single_quantile(const DesignMatrix& design, double p,
                                      const FitOptions& options) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidProbability(p);
  if (design.n == 0 || design.m == 0 || design.m > kMaxCols) {
    throw DegenerateDesign("empty design");
  }
  if (design.n < design.m) {
    throw DegenerateDesign("fewer rows than columns");
  }
  for (double v : design.x) {
    if (!std::isfinite(v)) throw DegenerateDesign("non-finite design entry");
  }
  for (double v : design.y) {
    if (!std::isfinite(v)) throw DegenerateDesign("non-finite response");
  }
  std::vector<bool> dependent = dependent_columns(design, 1e-10);
  for (std::size_t j = 0; j < design.m; ++j) {
    if (dependent[j]) {
      throw DegenerateDesign("column " + std::to_string(j) +
                             " is collinear with earlier columns");
    }
  }

  SolverState state = interior_point(design, p, options);
  polish_to_vertex(design, p, state.xi);

  const int m = static_cast<int>(design.m);
  SingleQuantileFit out;
  out.xi.assign(state.xi.begin(), state.xi.begin() + m);
  out.iterations = state.iterations;

  double y_scale = 1.0;
  for (double v : design.y) y_scale = std::max(y_scale, std::fabs(v));
  const double ztol = 1e-6 * y_scale;
  std::int64_t below = 0, zero = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < design.n; ++i) {
    double r = design.y[i] - dot_row(design.row(i), state.xi.data(), m);
    loss += r * (r >= 0.0 ? p : p - 1.0);
    if (r < -ztol) {
      ++below;
    } else if (r <= ztol) {
      ++zero;
    }
  }
  out.loss = loss;
  out.coverage = static_cast<double>(below) / static_cast<double>(design.n);
  out.n_zero_residuals = zero;
  return out;
}

FittedQuantileModel fit_grid(std::span<const PublicationRecord> records,
                             const ModelSpec& spec, const FitOptions& options) {
  return fit_grid_impl(records, spec, options);
}

FittedQuantileModel fit_grid(std::span<const NormalizedRecord> records,
                             const ModelSpec& spec,
                             const NormalizationConstants& constants,
                             const FitOptions& options) {
  FittedQuantileModel model = fit_grid_impl(records, spec, options);
  model.normalization = constants;
  return model;
}

std::vector<double> default_k0_candidates() {
  std::vector<double> out;
  for (int i = 1; i <= 20; ++i) out.push_back(static_cast<double>(i) / 10.0);
  return out;
}

K0Selection select_k0(std::span<const PublicationRecord> records,
                      const ModelSpec& spec, std::span<const double> candidates,
                      const FitOptions& options) {
  if (candidates.empty()) throw InvalidSpec("no k0 candidates");
  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  K0Selection out;
  bool have_best = false;
  double best = 0.0;
  for (double k0 : sorted) {
    if (!(k0 > 0.0) || !std::isfinite(k0)) {
      throw InvalidSpec("k0 candidate must be positive");
    }
    ModelSpec cand_spec = spec;
    cand_spec.k0 = k0;
    FittedQuantileModel model = fit_grid_impl(records, cand_spec, options);
    double objective = 0.0;
    for (const FitDiagnostics& d : model.diagnostics) {
      double dev = d.coverage - d.p;
      objective += dev * dev;
    }
    out.candidates.push_back({k0, objective});
    if (!have_best || objective < best) {
      have_best = true;
      best = objective;
      out.best_k0 = k0;
    }
  }
  return out;
}

}  // namespace citequant
