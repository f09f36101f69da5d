#ifndef CITEQUANT_DATA_IO_HPP
#define CITEQUANT_DATA_IO_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "citequant/model.hpp"

namespace citequant {

// Dataset CSV: header `id,cohort_year,impact_factor,c1,c_future`, UTF-8,
// LF line endings. Loading validates the header, field count, numeric
// syntax, id uniqueness and sign constraints; column numbers in errors are
// 1-based field positions.
std::vector<PublicationRecord> load_dataset(const std::string& path);
void save_dataset(const std::string& path,
                  std::span<const PublicationRecord> records);

// SplitMix64: the 64-bit mixing generator of Steele, Lea and Flood. Chosen
// because its whole state is one word, so per-record streams derived below
// make parallel generation order-independent and reproducible.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  double next_double();  // uniform on [0, 1) with 53 random bits
  double next_open();    // uniform on (0, 1)

 private:
  std::uint64_t state_;
};

// Stream for record `index` of a dataset seeded with `seed`. Defined as
// SplitMix64 starting from mix(seed XOR (index+1) * golden-gamma), where mix
// is the SplitMix64 output function; documented so external tools can
// reproduce any single record.
SplitMix64 record_stream(std::uint64_t seed, std::uint64_t index);

// Synthetic cohort law. With u ~ Uniform(0,1),
//   IF  ~ lognormal(mu_if, sigma_if)
//   c1  ~ Poisson(lambda * IF^theta)
//   c_future = max(0, round(scale_factor *
//              (exp(a + b(-ln(1-u)) + beta ln IF + gamma ln(c1+k0)) - 1)))
// The intercept law a + b(-ln(1-u)) makes the conditional upper tail exactly
// Pareto with index 1/b.
struct SyntheticSpec {
  std::int64_t n = 0;
  std::uint64_t seed = 42;
  double a = 1.0;
  double b = 0.5;
  double beta = 0.7;
  double gamma = 0.6;
  double k0 = 0.5;
  double mu_if = 0.7;
  double sigma_if = 0.5;
  double lambda = 3.0;
  double theta = 0.0;
  double scale_factor = 1.0;
  int cohort_year = 2000;
  std::string id_prefix = "syn-";
};

// Throws InvalidSpec when n < 1, b <= 0, k0 <= 0, sigma_if <= 0, lambda <= 0,
// theta < 0 or scale_factor <= 0.
void validate_synthetic_spec(const SyntheticSpec& spec);

// Deterministic for a given spec; record i depends only on (seed, i).
std::vector<PublicationRecord> generate_synthetic(const SyntheticSpec& spec);

std::string synthetic_spec_to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const std::string& text);

}  // namespace citequant

#endif  // CITEQUANT_DATA_IO_HPP
