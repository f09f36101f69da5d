#include "citequant/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "citequant/errors.hpp"

namespace citequant {

namespace {

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void check_model(const FittedQuantileModel& model) {
  validate_spec(model.spec);
  if (model.coefficients.size() != model.spec.quantile_grid.size()) {
    throw InvalidSpec("coefficient rows do not cover the quantile grid");
  }
}

}  // namespace

std::vector<std::pair<double, double>> zenga_curve(
    std::span<const double> sample, std::span<const double> grid) {
  if (sample.empty()) throw DegenerateSample("empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() < 0.0) throw DegenerateSample("negative sample value");

  const std::size_t n = sorted.size();
  // Extended precision keeps the curve scale invariant well below 1e-12.
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sorted[i];
  const long double total = prefix[n];
  if (!(total > 0.0L)) throw DegenerateSample("sample mean is not positive");

  std::vector<std::pair<double, double>> curve;
  curve.reserve(grid.size());
  for (double u : grid) {
    if (!(u > 0.0 && u < 1.0)) throw InvalidProbability(u);
    const double nu = static_cast<double>(n) * u;
    std::size_t m = static_cast<std::size_t>(nu);
    if (m >= n) m = n - 1;
    const long double frac = static_cast<long double>(nu) - m;
    // integral of the empirical quantile function over [0, u], times n
    const long double lower = prefix[m] + frac * sorted[m];
    const long double q_minus = lower / nu;
    const long double q_plus =
        (total - lower) / (static_cast<double>(n) * (1.0 - u));
    if (!(q_plus > 0.0L)) throw DegenerateSample("upper mean vanishes");
    curve.emplace_back(u, static_cast<double>(1.0L - q_minus / q_plus));
  }
  return curve;
}

std::vector<double> default_zenga_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 99; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  return grid;
}

bool zenga_convex_upper_half(std::span<const std::pair<double, double>> curve,
                             double epsilon) {
  std::vector<double> z;
  for (const auto& [u, zu] : curve) {
    if (u >= 0.5) z.push_back(zu);
  }
  for (std::size_t i = 1; i + 1 < z.size(); ++i) {
    if (z[i + 1] - 2.0 * z[i] + z[i - 1] < -epsilon) return false;
  }
  return true;
}

namespace {

template <typename R>
CalibrationReport calibration_impl(const FittedQuantileModel& model,
                                   std::span<const R> records,
                                   bool monotonize) {
  check_model(model);
  if (records.empty()) throw EmptyDataset("calibration needs records");
  const std::size_t np = model.spec.quantile_grid.size();
  std::vector<std::size_t> counts(np, 0);
  for (const R& rec : records) {
    const double lif = std::log(std::max(static_cast<double>(rec.impact_factor),
                                         model.spec.if_floor));
    const double lc1 =
        std::log(static_cast<double>(rec.c1) + model.spec.k0);
    const double c = static_cast<double>(rec.c_future);
    double running = 0.0;
    for (std::size_t j = 0; j < np; ++j) {
      const QuantileCoefficients& qc = model.coefficients[j];
      double q = std::exp(qc.c + qc.beta * lif + qc.gamma * lc1) -
                 model.spec.response_offset;
      q = std::max(0.0, q);
      if (monotonize) {
        running = std::max(running, q);
        q = running;
      }
      if (c < q) ++counts[j];
    }
  }
  CalibrationReport report;
  report.points.reserve(np);
  for (std::size_t j = 0; j < np; ++j) {
    CalibrationPoint pt;
    pt.p = model.spec.quantile_grid[j];
    pt.f = static_cast<double>(counts[j]) / static_cast<double>(records.size());
    double dev = pt.f - pt.p;
    report.sum_squared_error += dev * dev;
    report.points.push_back(pt);
  }
  return report;
}

}  // namespace

CalibrationReport calibration_curve(const FittedQuantileModel& model,
                                    std::span<const PublicationRecord> records,
                                    bool monotonize) {
  return calibration_impl(model, records, monotonize);
}

CalibrationReport calibration_curve(const FittedQuantileModel& model,
                                    std::span<const NormalizedRecord> records,
                                    bool monotonize) {
  return calibration_impl(model, records, monotonize);
}

double if_bucket_of(double impact_factor) {
  return static_cast<double>(std::llround(impact_factor * 2.0)) / 2.0;
}

std::vector<PublicationGroup> group_records(
    std::span<const PublicationRecord> records, std::size_t min_size) {
  // key in integer half-units so equal buckets compare exactly
  std::map<std::pair<long long, std::int64_t>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < records.size(); ++i) {
    cells[{std::llround(records[i].impact_factor * 2.0), records[i].c1}]
        .push_back(i);
  }
  std::vector<PublicationGroup> groups;
  for (const auto& [key, idx] : cells) {
    if (idx.size() < min_size) continue;
    PublicationGroup g;
    g.if_bucket = static_cast<double>(key.first) / 2.0;
    g.c1 = key.second;
    g.size = idx.size();
    g.members.reserve(idx.size());
    g.member_c_future.reserve(idx.size());
    for (std::size_t i : idx) {
      g.members.push_back(records[i].id);
      g.member_c_future.push_back(records[i].c_future);
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

double empirical_quantile(std::span<const double> sample, double p) {
  if (sample.empty()) throw DegenerateSample("empty sample");
  if (!(p > 0.0 && p < 1.0)) throw InvalidProbability(p);
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // smallest rank r with r/n >= p; the small shift guards against n*p
  // landing a hair above an integer
  std::size_t rank = static_cast<std::size_t>(std::ceil(n * p - 1e-9));
  if (rank < 1) rank = 1;
  if (rank > sorted.size()) rank = sorted.size();
  return sorted[rank - 1];
}

std::vector<GroupQuantileRow> group_quantile_comparison(
    const FittedQuantileModel& model, std::span<const PublicationGroup> groups,
    double p) {
  check_model(model);
  std::vector<GroupQuantileRow> rows;
  rows.reserve(groups.size());
  for (const PublicationGroup& g : groups) {
    GroupQuantileRow row;
    row.if_bucket = g.if_bucket;
    row.c1 = g.c1;
    row.size = g.size;
    row.predicted_q = predict_quantile_monotone(model, p, g.if_bucket,
                                                static_cast<double>(g.c1));
    std::vector<double> values(g.member_c_future.begin(),
                               g.member_c_future.end());
    row.empirical_q = empirical_quantile(values, p);
    rows.push_back(row);
  }
  return rows;
}

std::vector<HeatmapCell> coverage_heatmap(
    const FittedQuantileModel& model,
    std::span<const PublicationRecord> records, double p,
    std::size_t min_size) {
  check_model(model);
  const std::size_t pidx = model.grid_index(p);
  struct CellStat {
    std::size_t size = 0;
    std::size_t below = 0;
  };
  std::map<std::pair<long long, std::int64_t>, CellStat> cells;
  for (const PublicationRecord& rec : records) {
    const double lif = std::log(std::max(rec.impact_factor, model.spec.if_floor));
    const double lc1 = std::log(static_cast<double>(rec.c1) + model.spec.k0);
    double running = 0.0;
    for (std::size_t j = 0; j <= pidx; ++j) {
      const QuantileCoefficients& qc = model.coefficients[j];
      double q = std::exp(qc.c + qc.beta * lif + qc.gamma * lc1) -
                 model.spec.response_offset;
      running = std::max(running, std::max(0.0, q));
    }
    CellStat& stat = cells[{std::llround(rec.impact_factor * 2.0), rec.c1}];
    ++stat.size;
    if (static_cast<double>(rec.c_future) < running) ++stat.below;
  }
  std::vector<HeatmapCell> out;
  for (const auto& [key, stat] : cells) {
    if (stat.size < min_size) continue;
    HeatmapCell cell;
    cell.if_bucket = static_cast<double>(key.first) / 2.0;
    cell.c1 = key.second;
    cell.size = stat.size;
    cell.delta =
        static_cast<double>(stat.below) / static_cast<double>(stat.size) - p;
    out.push_back(cell);
  }
  return out;
}

// -- artifact writers --------------------------------------------------------

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot open '" + path + "' for writing");
  return out;
}

void finish_csv(std::ofstream& out, const std::string& path) {
  if (!out) throw Error(ErrorKind::data, "write failed for '" + path + "'");
}

}  // namespace

void write_zenga_csv(const std::string& path,
                     std::span<const std::pair<double, double>> curve) {
  std::ofstream out = open_csv(path);
  out << "u,Z\n";
  for (const auto& [u, z] : curve) {
    out << fmt_short(u) << ',' << fmt_short(z) << '\n';
  }
  finish_csv(out, path);
}

void write_calibration_csv(const std::string& path,
                           const CalibrationReport& report) {
  std::ofstream out = open_csv(path);
  out << "p,f\n";
  for (const CalibrationPoint& pt : report.points) {
    out << fmt_short(pt.p) << ',' << fmt_short(pt.f) << '\n';
  }
  finish_csv(out, path);
}

void write_groups_csv(const std::string& path,
                      std::span<const GroupQuantileRow> rows) {
  std::ofstream out = open_csv(path);
  out << "if_bucket,c1,size,predicted_q,empirical_q\n";
  for (const GroupQuantileRow& r : rows) {
    out << fmt_short(r.if_bucket) << ',' << r.c1 << ',' << r.size << ','
        << fmt_short(r.predicted_q) << ',' << fmt_short(r.empirical_q) << '\n';
  }
  finish_csv(out, path);
}

void write_heatmap_csv(const std::string& path,
                       std::span<const HeatmapCell> cells) {
  std::ofstream out = open_csv(path);
  out << "if_bucket,c1,delta\n";
  for (const HeatmapCell& c : cells) {
    out << fmt_short(c.if_bucket) << ',' << c.c1 << ',' << fmt_short(c.delta)
        << '\n';
  }
  finish_csv(out, path);
}

}  // namespace citequant
