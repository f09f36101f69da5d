// citequant: fit, inspect, and stress citation-quantile models from the
// command line. Every subcommand reads plain CSV/JSON and writes bit-stable
// artifacts; exit codes are 0 ok, 1 usage, 2 data, 3 numerical.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "citequant/data_io.hpp"
#include "citequant/diagnostics.hpp"
#include "citequant/errors.hpp"
#include "citequant/model.hpp"
#include "citequant/normalize.hpp"
#include "citequant/quantile_fit.hpp"
#include "citequant/tail.hpp"

namespace {

using namespace citequant;

// Flag values that parse but make no sense; reported as usage, not data.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_grid(const std::string& text) {
  double start = 0.0, stop = 0.0, step = 0.0;
  char tail = '\0';
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &start, &stop, &step, &tail) != 3) {
    throw UsageError("--grid expects start:stop:step, got '" + text + "'");
  }
  try {
    return make_quantile_grid(start, stop, step);
  } catch (const Error& e) {
    throw UsageError(std::string("--grid: ") + e.what());
  }
}

std::vector<double> parse_k0_candidates(const std::string& text) {
  if (text == "auto") return default_k0_candidates();
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("--select-k0 expects 'auto' or a comma list of reals, got '" +
                       item + "'");
    }
  }
  if (out.empty()) throw UsageError("--select-k0 list is empty");
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot open '" + path + "' for writing");
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::data, "cannot create directory '" + dir + "': " + ec.message());
  }
}

std::string join_path(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

// -- fit ---------------------------------------------------------------------

struct FitArgs {
  std::string input;
  std::string output;
  std::string variant = "full";
  double k0 = 0.5;
  std::string select_k0;  // empty: fixed k0
  std::string grid = "0.50:0.99:0.01";
  bool normalize = false;
  std::string cohort_label;
  unsigned threads = 1;
  int verbosity = 0;
};

int run_fit(const FitArgs& args) {
  ModelSpec spec;
  spec.variant = variant_from_name(args.variant);
  spec.quantile_grid = parse_grid(args.grid);
  if (!(args.k0 > 0.0)) throw UsageError("--k0 must be positive");
  spec.k0 = args.k0;

  auto records = load_dataset(args.input);

  FitOptions options;
  options.threads = args.threads == 0 ? 1 : args.threads;
  options.verbosity = args.verbosity;

  if (!args.select_k0.empty()) {
    auto candidates = parse_k0_candidates(args.select_k0);
    auto selection = select_k0(records, spec, candidates, options);
    spec.k0 = selection.best_k0;
    if (args.verbosity > 0) {
      for (const auto& c : selection.candidates) {
        std::fprintf(stderr, "select-k0: k0=%g objective=%.6g\n", c.k0, c.objective);
      }
    }
    std::printf("selected k0 = %g\n", spec.k0);
  }

  FittedQuantileModel model;
  if (args.normalize) {
    auto constants = compute_constants(records, args.cohort_label);
    auto normalized = normalize_dataset(records, constants);
    model = fit_grid(normalized, spec, constants, options);
  } else {
    model = fit_grid(records, spec, options);
  }
  save_model(args.output, model);
  if (args.verbosity > 0) {
    std::fprintf(stderr, "fit: %zu records, %zu grid quantiles -> %s\n",
                 records.size(), spec.quantile_grid.size(), args.output.c_str());
  }
  return 0;
}

// -- predict -----------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string input;
  std::string output;
};

int run_predict(const PredictArgs& args) {
  auto model = load_model(args.model);
  auto records = load_dataset(args.input);
  auto out = open_output(args.output);
  out << "id,p,predicted_q\n";
  char buf[64];
  for (const auto& rec : records) {
    auto curve = predict_conditional_cdf(model, rec.impact_factor,
                                         static_cast<double>(rec.c1));
    for (const auto& [q, p] : curve) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", p, q);
      out << rec.id << ',' << buf;
    }
  }
  if (!out) throw Error(ErrorKind::data, "write failed for '" + args.output + "'");
  return 0;
}

// -- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  std::string model;
  std::string input;
  std::string outdir;
  double p = 0.5;
  unsigned min_group_size = 50;
};

int run_evaluate(const EvaluateArgs& args) {
  if (!(args.p > 0.0 && args.p < 1.0)) throw UsageError("--p must lie in (0, 1)");
  auto model = load_model(args.model);
  auto records = load_dataset(args.input);
  ensure_dir(args.outdir);

  auto calibration = calibration_curve(model, records);
  write_calibration_csv(join_path(args.outdir, "calibration.csv"), calibration);

  auto groups = group_records(records, args.min_group_size);
  auto rows = group_quantile_comparison(model, groups, args.p);
  write_groups_csv(join_path(args.outdir, "groups.csv"), rows);

  auto cells = coverage_heatmap(model, records, args.p, args.min_group_size);
  write_heatmap_csv(join_path(args.outdir, "heatmap.csv"), cells);
  return 0;
}

// -- tail --------------------------------------------------------------------

struct TailArgs {
  std::string input;
  std::string outdir;
  unsigned k = 0;  // 0: AMSE-driven threshold scan
  unsigned k_min = 0;
  unsigned k_max = 0;
};

int run_tail(const TailArgs& args) {
  auto records = load_dataset(args.input);
  std::vector<double> desc;
  desc.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.c_future > 0) desc.push_back(static_cast<double>(rec.c_future));
  }
  std::sort(desc.begin(), desc.end(), std::greater<double>());
  if (desc.size() < 2) {
    throw Error(ErrorKind::data, "tail analysis needs at least 2 positive counts");
  }
  ensure_dir(args.outdir);

  const std::size_t n = records.size();
  std::size_t k_min = args.k_min ? args.k_min : default_k_min();
  std::size_t k_max = args.k_max ? args.k_max : default_k_max(n);
  k_max = std::min(k_max, desc.size() - 1);
  k_min = std::min(k_min, k_max);

  TailEstimate estimate;
  std::vector<HillScanPoint> scan;
  if (args.k > 0) {
    estimate = hill_estimate(desc, args.k);
    hill_scan(desc, k_min, k_max).swap(scan);
  } else {
    estimate = select_threshold(desc, k_min, k_max, &scan);
  }
  // The estimate's sample size should describe the full corpus, zeros
  // included, so p* refers to the whole cohort.
  estimate.n = n;
  estimate.p_star = 1.0 - static_cast<double>(estimate.k) / static_cast<double>(n);

  auto out = open_output(join_path(args.outdir, "tail.json"));
  out << tail_to_json(estimate);
  if (!out) throw Error(ErrorKind::data, "write failed for tail.json");
  write_hill_scan_csv(join_path(args.outdir, "hill_scan.csv"), scan);
  return 0;
}

// -- zenga -------------------------------------------------------------------

struct ZengaArgs {
  std::string input;
  std::string output;
  std::string grid = "0.01:0.99:0.01";
};

int run_zenga(const ZengaArgs& args) {
  auto records = load_dataset(args.input);
  std::vector<double> sample;
  sample.reserve(records.size());
  for (const auto& rec : records) sample.push_back(static_cast<double>(rec.c_future));
  auto curve = zenga_curve(sample, parse_grid(args.grid));
  write_zenga_csv(args.output, curve);
  return 0;
}

// -- synth -------------------------------------------------------------------

struct SynthArgs {
  std::string output;
  std::string config;
  SyntheticSpec spec;
  // CLI11 app pointer used to ask which flags were passed explicitly.
  CLI::App* cmd = nullptr;
};

int run_synth(SynthArgs& args) {
  SyntheticSpec spec;
  spec.n = 1000;  // flag-path default; a config file must carry its own n
  if (!args.config.empty()) {
    std::ifstream in(args.config, std::ios::binary);
    if (!in) throw Error(ErrorKind::data, "cannot open '" + args.config + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    spec = synthetic_spec_from_json(ss.str());
  }
  // Explicit flags win over the config file.
  auto passed = [&](const char* name) { return args.cmd->count(name) > 0; };
  if (passed("--n")) spec.n = args.spec.n;
  if (passed("--seed")) spec.seed = args.spec.seed;
  if (passed("--a")) spec.a = args.spec.a;
  if (passed("--b")) spec.b = args.spec.b;
  if (passed("--beta")) spec.beta = args.spec.beta;
  if (passed("--gamma")) spec.gamma = args.spec.gamma;
  if (passed("--k0")) spec.k0 = args.spec.k0;
  if (passed("--mu-if")) spec.mu_if = args.spec.mu_if;
  if (passed("--sigma-if")) spec.sigma_if = args.spec.sigma_if;
  if (passed("--lambda")) spec.lambda = args.spec.lambda;
  if (passed("--theta")) spec.theta = args.spec.theta;
  if (passed("--scale")) spec.scale_factor = args.spec.scale_factor;
  if (passed("--cohort-year")) spec.cohort_year = args.spec.cohort_year;
  if (passed("--id-prefix")) spec.id_prefix = args.spec.id_prefix;

  auto records = generate_synthetic(spec);
  save_dataset(args.output, records);
  return 0;
}

// -- transfer ----------------------------------------------------------------

struct TransferArgs {
  std::string model;
  std::string input;
  std::string outdir;
  std::string cohort_label;
};

int run_transfer(const TransferArgs& args) {
  auto model = load_model(args.model);
  auto records = load_dataset(args.input);
  auto constants = compute_constants(records, args.cohort_label);
  ensure_dir(args.outdir);

  CalibrationReport report;
  report.points.reserve(model.spec.quantile_grid.size());
  for (double p : model.spec.quantile_grid) {
    std::size_t below = 0;
    for (const auto& rec : records) {
      double q = transfer_predict(model, constants, p, rec.impact_factor,
                                  static_cast<double>(rec.c1));
      if (static_cast<double>(rec.c_future) < q) ++below;
    }
    double f = static_cast<double>(below) / static_cast<double>(records.size());
    report.points.push_back({p, f});
    report.sum_squared_error += (f - p) * (f - p);
  }
  write_calibration_csv(join_path(args.outdir, "calibration.csv"), report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"citation-quantile modeling: quantile regression with Pareto tail "
               "extrapolation, diagnostics, and a seeded synthetic generator"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit the quantile grid to a dataset");
  fit->add_option("--input", fit_args.input, "dataset CSV")->required();
  fit->add_option("--output", fit_args.output, "model JSON path")->required();
  fit->add_option("--variant", fit_args.variant, "model variant")
      ->check(CLI::IsMember({"if", "c1", "full"}));
  fit->add_option("--k0", fit_args.k0, "offset inside ln(c1 + k0) [0.5]");
  fit->add_option("--select-k0", fit_args.select_k0,
                  "'auto' or comma list; picks the k0 with the best coverage");
  fit->add_option("--grid", fit_args.grid, "quantile grid start:stop:step");
  fit->add_flag("--normalize", fit_args.normalize,
                "divide covariates and response by their cohort means");
  fit->add_option("--cohort-label", fit_args.cohort_label,
                  "label stored with the normalization constants");
  fit->add_option("--threads", fit_args.threads, "worker threads across the grid");
  fit->add_flag("-v,--verbose", fit_args.verbosity, "progress on stderr");

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Per-record quantile curves");
  predict->add_option("--model", predict_args.model, "model JSON")->required();
  predict->add_option("--input", predict_args.input, "dataset CSV")->required();
  predict->add_option("--output", predict_args.output, "long-format CSV")->required();

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Calibration, grouped quantiles, coverage heatmap");
  evaluate->add_option("--model", eval_args.model, "model JSON")->required();
  evaluate->add_option("--input", eval_args.input, "dataset CSV")->required();
  evaluate->add_option("--outdir", eval_args.outdir, "artifact directory")->required();
  evaluate->add_option("--p", eval_args.p, "quantile for groups/heatmap [0.5]");
  evaluate->add_option("--min-group-size", eval_args.min_group_size,
                       "smallest (IF bucket, c1) cell kept [50]");

  TailArgs tail_args;
  auto* tail = app.add_subcommand("tail", "Hill tail index and threshold scan");
  tail->add_option("--input", tail_args.input, "dataset CSV")->required();
  tail->add_option("--outdir", tail_args.outdir, "artifact directory")->required();
  tail->add_option("--k", tail_args.k, "fixed number of tail order statistics");
  tail->add_option("--kmin", tail_args.k_min, "smallest k scanned [10]");
  tail->add_option("--kmax", tail_args.k_max, "largest k scanned [n/4]");

  ZengaArgs zenga_args;
  auto* zenga = app.add_subcommand("zenga", "Zenga curve of the c_future sample");
  zenga->add_option("--input", zenga_args.input, "dataset CSV")->required();
  zenga->add_option("--output", zenga_args.output, "curve CSV")->required();
  zenga->add_option("--grid", zenga_args.grid, "u grid start:stop:step");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Seeded synthetic cohort generator");
  synth->add_option("--output", synth_args.output, "dataset CSV path")->required();
  synth->add_option("--config", synth_args.config, "synthetic spec JSON");
  synth->add_option("--n", synth_args.spec.n, "records [1000]");
  synth->add_option("--seed", synth_args.spec.seed, "RNG seed [42]");
  synth->add_option("--a", synth_args.spec.a, "intercept a of C(u)");
  synth->add_option("--b", synth_args.spec.b, "slope b of C(u); tail alpha = 1/b");
  synth->add_option("--beta", synth_args.spec.beta, "IF exponent");
  synth->add_option("--gamma", synth_args.spec.gamma, "c1 exponent");
  synth->add_option("--k0", synth_args.spec.k0, "embedded k0");
  synth->add_option("--mu-if", synth_args.spec.mu_if, "lognormal IF location");
  synth->add_option("--sigma-if", synth_args.spec.sigma_if, "lognormal IF scale");
  synth->add_option("--lambda", synth_args.spec.lambda, "base Poisson rate for c1");
  synth->add_option("--theta", synth_args.spec.theta, "c1 rate exponent on IF");
  synth->add_option("--scale", synth_args.spec.scale_factor,
                    "multiplies every c_future (cohort drift)");
  synth->add_option("--cohort-year", synth_args.spec.cohort_year, "cohort year");
  synth->add_option("--id-prefix", synth_args.spec.id_prefix, "record id prefix");
  synth_args.cmd = synth;

  TransferArgs transfer_args;
  auto* transfer = app.add_subcommand(
      "transfer", "Normalized-transfer calibration on a new cohort");
  transfer->add_option("--model", transfer_args.model,
                       "model JSON fitted with --normalize")->required();
  transfer->add_option("--input", transfer_args.input, "target cohort CSV")->required();
  transfer->add_option("--outdir", transfer_args.outdir, "artifact directory")->required();
  transfer->add_option("--cohort-label", transfer_args.cohort_label,
                       "label for the target cohort");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (auto nl = msg.find('\n'); nl != std::string::npos) msg.resize(nl);
    std::fprintf(stderr, "ERROR 1 %s\n", msg.c_str());
    return 1;
  }

  try {
    if (fit->parsed()) return run_fit(fit_args);
    if (predict->parsed()) return run_predict(predict_args);
    if (evaluate->parsed()) return run_evaluate(eval_args);
    if (tail->parsed()) return run_tail(tail_args);
    if (zenga->parsed()) return run_zenga(zenga_args);
    if (synth->parsed()) return run_synth(synth_args);
    if (transfer->parsed()) return run_transfer(transfer_args);
    std::fprintf(stderr, "ERROR 1 no subcommand\n");
    return 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "ERROR 1 %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    int code = e.kind() == ErrorKind::data ? 2 : 3;
    std::fprintf(stderr, "ERROR %d %s\n", code, e.what());
    return code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ERROR 3 %s\n", e.what());
    return 3;
  }
}
