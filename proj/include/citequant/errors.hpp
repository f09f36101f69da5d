#ifndef CITEQUANT_ERRORS_HPP
#define CITEQUANT_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace citequant {

// Broad failure categories, used by callers (notably the command line tool)
// to map exceptions onto exit codes without inspecting concrete types.
enum class ErrorKind { data, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// -- input / dataset problems ------------------------------------------------

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& reason)
      : Error(ErrorKind::data, "parse error at line " + std::to_string(line) +
                                   ", column " + std::to_string(column) + ": " +
                                   reason),
        line(line),
        column(column) {}

  std::size_t line;
  std::size_t column;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& id, std::size_t line)
      : Error(ErrorKind::data, "duplicate record id '" + id + "' at line " +
                                   std::to_string(line)) {}
};

class NegativeValue : public Error {
 public:
  NegativeValue(const std::string& field, std::size_t line)
      : Error(ErrorKind::data, "negative value in column '" + field +
                                   "' at line " + std::to_string(line)) {}
};

class EmptyDataset : public Error {
 public:
  explicit EmptyDataset(const std::string& what)
      : Error(ErrorKind::data, "empty dataset: " + what) {}
};

class ZeroMeanColumn : public Error {
 public:
  explicit ZeroMeanColumn(const std::string& column)
      : Error(ErrorKind::data, "column '" + column +
                                   "' has zero mean; normalization undefined") {}
};

class MissingNormalization : public Error {
 public:
  MissingNormalization()
      : Error(ErrorKind::data,
              "model carries no normalization constants; transfer prediction "
              "requires a model fitted on normalized data") {}
};

class DegenerateSample : public Error {
 public:
  explicit DegenerateSample(const std::string& what)
      : Error(ErrorKind::data, "degenerate sample: " + what) {}
};

class NonPositiveSample : public Error {
 public:
  explicit NonPositiveSample(const std::string& what)
      : Error(ErrorKind::data, "non-positive sample values: " + what) {}
};

// -- model / numerical problems ----------------------------------------------

class InvalidSpec : public Error {
 public:
  explicit InvalidSpec(const std::string& what)
      : Error(ErrorKind::numeric, "invalid model specification: " + what) {}
};

class UnknownQuantile : public Error {
 public:
  explicit UnknownQuantile(double p)
      : Error(ErrorKind::numeric,
              "quantile level " + std::to_string(p) + " is not on the grid") {}
};

class InvalidCovariate : public Error {
 public:
  explicit InvalidCovariate(const std::string& what)
      : Error(ErrorKind::numeric, "invalid covariate: " + what) {}
};

class InvalidProbability : public Error {
 public:
  explicit InvalidProbability(double p)
      : Error(ErrorKind::numeric, "probability " + std::to_string(p) +
                                      " outside the open interval (0, 1)") {}
};

class DegenerateDesign : public Error {
 public:
  explicit DegenerateDesign(const std::string& what)
      : Error(ErrorKind::numeric, "degenerate design: " + what) {}
};

class NonConvergence : public Error {
 public:
  explicit NonConvergence(const std::string& what)
      : Error(ErrorKind::numeric, "solver failed to converge: " + what) {}
};

class InvalidThreshold : public Error {
 public:
  explicit InvalidThreshold(const std::string& what)
      : Error(ErrorKind::numeric, "invalid tail threshold: " + what) {}
};

class BelowThreshold : public Error {
 public:
  BelowThreshold(double p, double p_star)
      : Error(ErrorKind::numeric,
              "probability " + std::to_string(p) +
                  " lies below the tail threshold level " +
                  std::to_string(p_star)) {}
};

}  // namespace citequant

#endif  // CITEQUANT_ERRORS_HPP
