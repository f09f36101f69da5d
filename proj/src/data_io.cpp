#include "citequant/data_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "citequant/errors.hpp"

namespace citequant {

namespace {

constexpr char kHeader[] = "id,cohort_year,impact_factor,c1,c_future";
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

long long parse_integer(const std::string& field, std::size_t line,
                        std::size_t column, const char* name) {
  if (field.empty()) throw ParseError(line, column, std::string(name) + " is empty");
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(field.c_str(), &end, 10);
  if (errno == ERANGE) {
    throw ParseError(line, column, std::string(name) + " out of range");
  }
  if (end != field.c_str() + field.size()) {
    throw ParseError(line, column,
                     std::string(name) + " is not an integer: '" + field + "'");
  }
  return v;
}

double parse_real(const std::string& field, std::size_t line,
                  std::size_t column, const char* name) {
  if (field.empty()) throw ParseError(line, column, std::string(name) + " is empty");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) {
    throw ParseError(line, column,
                     std::string(name) + " is not a number: '" + field + "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError(line, column, std::string(name) + " is not finite");
  }
  return v;
}

}  // namespace

std::vector<PublicationRecord> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data, "cannot open '" + path + "'");

  std::vector<PublicationRecord> records;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kHeader) {
        throw ParseError(1, 1, std::string("expected header '") + kHeader + "'");
      }
      continue;
    }
    if (line.empty()) throw ParseError(line_no, 1, "empty line");
    std::vector<std::string> f = split_fields(line);
    if (f.size() != 5) {
      throw ParseError(line_no, f.size(),
                       "expected 5 fields, found " + std::to_string(f.size()));
    }
    PublicationRecord rec;
    if (f[0].empty()) throw ParseError(line_no, 1, "id is empty");
    rec.id = f[0];
    if (!seen_ids.insert(rec.id).second) throw DuplicateId(rec.id, line_no);
    rec.cohort_year =
        static_cast<int>(parse_integer(f[1], line_no, 2, "cohort_year"));
    rec.impact_factor = parse_real(f[2], line_no, 3, "impact_factor");
    if (rec.impact_factor < 0.0) throw NegativeValue("impact_factor", line_no);
    rec.c1 = parse_integer(f[3], line_no, 4, "c1");
    if (rec.c1 < 0) throw NegativeValue("c1", line_no);
    rec.c_future = parse_integer(f[4], line_no, 5, "c_future");
    if (rec.c_future < 0) throw NegativeValue("c_future", line_no);
    records.push_back(std::move(rec));
  }
  return records;
}

void save_dataset(const std::string& path,
                  std::span<const PublicationRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot open '" + path + "' for writing");
  out << kHeader << '\n';
  for (const PublicationRecord& rec : records) {
    out << rec.id << ',' << rec.cohort_year << ',' << fmt_g17(rec.impact_factor)
        << ',' << rec.c1 << ',' << rec.c_future << '\n';
  }
  if (!out) throw Error(ErrorKind::data, "write failed for '" + path + "'");
}

// -- random generation -------------------------------------------------------

namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double standard_normal(SplitMix64& g) {
  // Box-Muller; the open-interval draw keeps ln() finite.
  double u1 = g.next_open();
  double u2 = g.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::int64_t poisson_draw(SplitMix64& g, double lambda) {
  if (!(lambda > 0.0)) return 0;
  if (lambda < 500.0) {
    // CDF inversion with the multiplicative term recurrence.
    double u = g.next_double();
    double term = std::exp(-lambda);
    double cdf = 0.0;
    std::int64_t k = 0;
    while (cdf + term < u && k < 1000000) {
      cdf += term;
      ++k;
      term *= lambda / static_cast<double>(k);
    }
    return k;
  }
  // Extreme rates: rounded normal approximation.
  double z = standard_normal(g);
  std::int64_t v = std::llround(lambda + std::sqrt(lambda) * z);
  return v < 0 ? 0 : v;
}

}  // namespace

std::uint64_t SplitMix64::next() {
  state_ += kGoldenGamma;
  return mix64(state_);
}

double SplitMix64::next_double() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::next_open() {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

SplitMix64 record_stream(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(mix64(seed ^ ((index + 1) * kGoldenGamma)));
}

void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.n < 1) throw InvalidSpec("synthetic n must be at least 1");
  if (!(spec.b > 0.0)) throw InvalidSpec("synthetic b must be positive");
  if (!(spec.k0 > 0.0)) throw InvalidSpec("synthetic k0 must be positive");
  if (!(spec.sigma_if > 0.0)) throw InvalidSpec("sigma_if must be positive");
  if (!(spec.lambda > 0.0)) throw InvalidSpec("lambda must be positive");
  if (spec.theta < 0.0) throw InvalidSpec("theta must be non-negative");
  if (!(spec.scale_factor > 0.0)) {
    throw InvalidSpec("scale_factor must be positive");
  }
}

std::vector<PublicationRecord> generate_synthetic(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);
  std::vector<PublicationRecord> records;
  records.reserve(static_cast<std::size_t>(spec.n));
  for (std::int64_t i = 0; i < spec.n; ++i) {
    SplitMix64 g = record_stream(spec.seed, static_cast<std::uint64_t>(i));
    PublicationRecord rec;
    rec.id = spec.id_prefix + std::to_string(i + 1);
    rec.cohort_year = spec.cohort_year;
    rec.impact_factor = std::exp(spec.mu_if + spec.sigma_if * standard_normal(g));
    double rate = spec.lambda * std::pow(rec.impact_factor, spec.theta);
    rec.c1 = poisson_draw(g, rate);
    double u = g.next_open();
    double log_q = spec.a + spec.b * (-std::log1p(-u)) +
                   spec.beta * std::log(rec.impact_factor) +
                   spec.gamma * std::log(static_cast<double>(rec.c1) + spec.k0);
    double pre = std::exp(log_q) - 1.0;
    std::int64_t c = std::llround(spec.scale_factor * pre);
    rec.c_future = c < 0 ? 0 : c;
    records.push_back(std::move(rec));
  }
  return records;
}

std::string synthetic_spec_to_json(const SyntheticSpec& spec) {
  std::string out = "{\n";
  out += "  \"n\": " + std::to_string(spec.n) + ",\n";
  out += "  \"seed\": " + std::to_string(spec.seed) + ",\n";
  out += "  \"a\": " + fmt_g17(spec.a) + ",\n";
  out += "  \"b\": " + fmt_g17(spec.b) + ",\n";
  out += "  \"beta\": " + fmt_g17(spec.beta) + ",\n";
  out += "  \"gamma\": " + fmt_g17(spec.gamma) + ",\n";
  out += "  \"k0\": " + fmt_g17(spec.k0) + ",\n";
  out += "  \"mu_if\": " + fmt_g17(spec.mu_if) + ",\n";
  out += "  \"sigma_if\": " + fmt_g17(spec.sigma_if) + ",\n";
  out += "  \"lambda\": " + fmt_g17(spec.lambda) + ",\n";
  out += "  \"theta\": " + fmt_g17(spec.theta) + ",\n";
  out += "  \"scale_factor\": " + fmt_g17(spec.scale_factor) + ",\n";
  out += "  \"cohort_year\": " + std::to_string(spec.cohort_year) + ",\n";
  out += "  \"id_prefix\": \"" + spec.id_prefix + "\"\n";
  out += "}\n";
  return out;
}

SyntheticSpec synthetic_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, 0, std::string("synthetic spec JSON: ") + e.what());
  }
  try {
    SyntheticSpec spec;
    spec.n = j.value("n", spec.n);
    spec.seed = j.value("seed", spec.seed);
    spec.a = j.value("a", spec.a);
    spec.b = j.value("b", spec.b);
    spec.beta = j.value("beta", spec.beta);
    spec.gamma = j.value("gamma", spec.gamma);
    spec.k0 = j.value("k0", spec.k0);
    spec.mu_if = j.value("mu_if", spec.mu_if);
    spec.sigma_if = j.value("sigma_if", spec.sigma_if);
    spec.lambda = j.value("lambda", spec.lambda);
    spec.theta = j.value("theta", spec.theta);
    spec.scale_factor = j.value("scale_factor", spec.scale_factor);
    spec.cohort_year = j.value("cohort_year", spec.cohort_year);
    spec.id_prefix = j.value("id_prefix", spec.id_prefix);
    validate_synthetic_spec(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, 0, std::string("synthetic spec JSON: ") + e.what());
  }
}

}  // namespace citequant
