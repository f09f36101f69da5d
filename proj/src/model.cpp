#include "citequant/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "citequant/errors.hpp"

namespace citequant {

namespace {

// 17 significant digits: enough for binary64 write -> read identity.
std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw InvalidSpec(std::string(what) + " is not finite");
  }
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::if_only: return "if";
    case Variant::c1_only: return "c1";
    case Variant::full: return "full";
  }
  throw InvalidSpec("unknown variant value");
}

Variant variant_from_name(const std::string& name) {
  if (name == "if") return Variant::if_only;
  if (name == "c1") return Variant::c1_only;
  if (name == "full") return Variant::full;
  throw InvalidSpec("unknown variant name '" + name + "'");
}

void validate_spec(const ModelSpec& spec) {
  if (!(spec.k0 > 0.0) || !std::isfinite(spec.k0)) {
    throw InvalidSpec("k0 must be positive");
  }
  if (!(spec.response_offset > 0.0) || !std::isfinite(spec.response_offset)) {
    throw InvalidSpec("response_offset must be positive");
  }
  if (!(spec.if_floor > 0.0) || !std::isfinite(spec.if_floor)) {
    throw InvalidSpec("if_floor must be positive");
  }
  if (spec.quantile_grid.empty()) {
    throw InvalidSpec("quantile grid is empty");
  }
  double prev = 0.0;
  for (double p : spec.quantile_grid) {
    if (!(p > 0.0 && p < 1.0)) {
      throw InvalidSpec("grid point " + fmt_g17(p) + " outside (0, 1)");
    }
    if (p <= prev) {
      throw InvalidSpec("quantile grid is not strictly increasing");
    }
    prev = p;
  }
}

std::vector<double> make_quantile_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop >= start)) {
    throw InvalidSpec("quantile grid bounds must satisfy start <= stop, step > 0");
  }
  // Integer nano-units sidestep accumulated rounding, so 0.57 is the double
  // nearest to the decimal 0.57 no matter how the grid was produced.
  const double unit = 1e9;
  const long long s = std::llround(start * unit);
  const long long e = std::llround(stop * unit);
  const long long d = std::llround(step * unit);
  if (d <= 0) throw InvalidSpec("quantile grid step too small");
  std::vector<double> grid;
  for (long long v = s; v <= e; v += d) {
    grid.push_back(static_cast<double>(v) / unit);
  }
  return grid;
}

std::vector<double> default_quantile_grid() {
  return make_quantile_grid(0.50, 0.99, 0.01);
}

std::size_t FittedQuantileModel::grid_index(double p) const {
  const auto& grid = spec.quantile_grid;
  auto it = std::lower_bound(grid.begin(), grid.end(), p);
  if (it == grid.end() || *it != p) {
    throw UnknownQuantile(p);
  }
  return static_cast<std::size_t>(it - grid.begin());
}

namespace {

void check_covariates(double impact_factor, double c1) {
  if (!std::isfinite(impact_factor) || impact_factor < 0.0) {
    throw InvalidCovariate("impact factor must be finite and non-negative");
  }
  if (!std::isfinite(c1) || c1 < 0.0) {
    throw InvalidCovariate("c1 must be finite and non-negative");
  }
}

double log_quantile(const FittedQuantileModel& model, std::size_t idx,
                    double impact_factor, double c1) {
  const QuantileCoefficients& q = model.coefficients.at(idx);
  double lq = q.c;
  if (q.beta != 0.0) {
    lq += q.beta * std::log(std::max(impact_factor, model.spec.if_floor));
  }
  if (q.gamma != 0.0) {
    lq += q.gamma * std::log(c1 + model.spec.k0);
  }
  return lq;
}

// Covariates moved into the model's fitting scale, plus the factor that takes
// predictions back to counts. Identity for models fitted on raw data.
struct FitScale {
  double impact_factor;
  double c1;
  double back;
};

FitScale to_fit_scale(const FittedQuantileModel& model, double impact_factor,
                      double c1) {
  FitScale s{impact_factor, c1, 1.0};
  if (model.normalization) {
    const NormalizationConstants& n = *model.normalization;
    if (n.if_normalized) s.impact_factor = impact_factor / n.mean_if;
    s.c1 = c1 / n.mean_c1;
    s.back = n.mean_c_future;
  }
  return s;
}

}  // namespace

double predict_quantile_fit_scale(const FittedQuantileModel& model, double p,
                                  double impact_factor, double c1) {
  check_covariates(impact_factor, c1);
  std::size_t idx = model.grid_index(p);
  double q = std::exp(log_quantile(model, idx, impact_factor, c1)) -
             model.spec.response_offset;
  return std::max(0.0, q);
}

double predict_quantile(const FittedQuantileModel& model, double p,
                        double impact_factor, double c1) {
  FitScale s = to_fit_scale(model, impact_factor, c1);
  return s.back * predict_quantile_fit_scale(model, p, s.impact_factor, s.c1);
}

double predict_quantile_pre_offset(const FittedQuantileModel& model, double p,
                                   double impact_factor, double c1) {
  FitScale s = to_fit_scale(model, impact_factor, c1);
  check_covariates(s.impact_factor, s.c1);
  std::size_t idx = model.grid_index(p);
  return std::exp(log_quantile(model, idx, s.impact_factor, s.c1));
}

std::vector<std::pair<double, double>> predict_conditional_cdf(
    const FittedQuantileModel& model, double impact_factor, double c1) {
  FitScale s = to_fit_scale(model, impact_factor, c1);
  check_covariates(s.impact_factor, s.c1);
  std::vector<std::pair<double, double>> out;
  out.reserve(model.spec.quantile_grid.size());
  double running = 0.0;
  for (std::size_t i = 0; i < model.spec.quantile_grid.size(); ++i) {
    double q = std::exp(log_quantile(model, i, s.impact_factor, s.c1)) -
               model.spec.response_offset;
    q = std::max(0.0, q);
    running = std::max(running, q);
    out.emplace_back(s.back * running, model.spec.quantile_grid[i]);
  }
  return out;
}

double predict_quantile_monotone(const FittedQuantileModel& model, double p,
                                 double impact_factor, double c1) {
  FitScale s = to_fit_scale(model, impact_factor, c1);
  check_covariates(s.impact_factor, s.c1);
  std::size_t idx = model.grid_index(p);
  double running = 0.0;
  for (std::size_t i = 0; i <= idx; ++i) {
    double q = std::exp(log_quantile(model, i, s.impact_factor, s.c1)) -
               model.spec.response_offset;
    running = std::max(running, std::max(0.0, q));
  }
  return s.back * running;
}

// -- serialization -----------------------------------------------------------

std::string model_to_json(const FittedQuantileModel& model) {
  validate_spec(model.spec);
  if (model.coefficients.size() != model.spec.quantile_grid.size()) {
    throw InvalidSpec("coefficient rows do not cover the quantile grid");
  }
  std::string out;
  out += "{\n  \"spec\": {\n";
  out += "    \"variant\": \"" + variant_name(model.spec.variant) + "\",\n";
  out += "    \"k0\": " + fmt_g17(model.spec.k0) + ",\n";
  out += "    \"response_offset\": " + fmt_g17(model.spec.response_offset) + ",\n";
  out += "    \"if_floor\": " + fmt_g17(model.spec.if_floor) + ",\n";
  out += "    \"quantile_grid\": [";
  for (std::size_t i = 0; i < model.spec.quantile_grid.size(); ++i) {
    if (i) out += ", ";
    out += fmt_g17(model.spec.quantile_grid[i]);
  }
  out += "]\n  },\n";

  out += "  \"coefficients\": [\n";
  for (std::size_t i = 0; i < model.coefficients.size(); ++i) {
    const QuantileCoefficients& q = model.coefficients[i];
    require_finite(q.c, "C");
    require_finite(q.beta, "beta");
    require_finite(q.gamma, "gamma");
    out += "    {\"p\": " + fmt_g17(q.p) + ", \"C\": " + fmt_g17(q.c) +
           ", \"beta\": " + fmt_g17(q.beta) +
           ", \"gamma\": " + fmt_g17(q.gamma) + "}";
    out += (i + 1 < model.coefficients.size()) ? ",\n" : "\n";
  }
  out += "  ],\n";

  out += "  \"normalization\": ";
  if (model.normalization) {
    const NormalizationConstants& c = *model.normalization;
    out += "{\"mean_c1\": " + fmt_g17(c.mean_c1) +
           ", \"mean_if\": " + fmt_g17(c.mean_if) +
           ", \"mean_c_future\": " + fmt_g17(c.mean_c_future) +
           ", \"cohort_label\": \"" + json_escape(c.cohort_label) +
           "\", \"if_normalized\": " + (c.if_normalized ? "true" : "false") +
           "}";
  } else {
    out += "null";
  }
  out += ",\n";

  out += "  \"diagnostics\": [\n";
  for (std::size_t i = 0; i < model.diagnostics.size(); ++i) {
    const FitDiagnostics& d = model.diagnostics[i];
    out += "    {\"p\": " + fmt_g17(d.p) +
           ", \"pinball_loss\": " + fmt_g17(d.pinball_loss) +
           ", \"coverage\": " + fmt_g17(d.coverage) +
           ", \"n_zero_residuals\": " + std::to_string(d.n_zero_residuals) +
           "}";
    out += (i + 1 < model.diagnostics.size()) ? ",\n" : "\n";
  }
  out += "  ]\n}\n";
  return out;
}

FittedQuantileModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, 0, std::string("model JSON: ") + e.what());
  }
  try {
    FittedQuantileModel model;
    const auto& spec = j.at("spec");
    model.spec.variant = variant_from_name(spec.at("variant").get<std::string>());
    model.spec.k0 = spec.at("k0").get<double>();
    model.spec.response_offset = spec.at("response_offset").get<double>();
    model.spec.if_floor = spec.value("if_floor", kIfFloor);
    model.spec.quantile_grid = spec.at("quantile_grid").get<std::vector<double>>();
    for (const auto& row : j.at("coefficients")) {
      QuantileCoefficients q;
      q.p = row.at("p").get<double>();
      q.c = row.at("C").get<double>();
      q.beta = row.at("beta").get<double>();
      q.gamma = row.at("gamma").get<double>();
      model.coefficients.push_back(q);
    }
    if (!j.at("normalization").is_null()) {
      const auto& n = j.at("normalization");
      NormalizationConstants c;
      c.mean_c1 = n.at("mean_c1").get<double>();
      c.mean_if = n.at("mean_if").get<double>();
      c.mean_c_future = n.at("mean_c_future").get<double>();
      c.cohort_label = n.at("cohort_label").get<std::string>();
      c.if_normalized = n.value("if_normalized", true);
      model.normalization = c;
    }
    for (const auto& row : j.at("diagnostics")) {
      FitDiagnostics d;
      d.p = row.at("p").get<double>();
      d.pinball_loss = row.at("pinball_loss").get<double>();
      d.coverage = row.at("coverage").get<double>();
      d.n_zero_residuals = row.at("n_zero_residuals").get<std::int64_t>();
      model.diagnostics.push_back(d);
    }
    validate_spec(model.spec);
    if (model.coefficients.size() != model.spec.quantile_grid.size()) {
      throw InvalidSpec("coefficient rows do not cover the quantile grid");
    }
    for (std::size_t i = 0; i < model.coefficients.size(); ++i) {
      if (model.coefficients[i].p != model.spec.quantile_grid[i]) {
        throw InvalidSpec("coefficient rows out of step with the grid");
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, 0, std::string("model JSON: ") + e.what());
  }
}

void save_model(const std::string& path, const FittedQuantileModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot open '" + path + "' for writing");
  out << model_to_json(model);
  if (!out) throw Error(ErrorKind::data, "write failed for '" + path + "'");
}

FittedQuantileModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace citequant
