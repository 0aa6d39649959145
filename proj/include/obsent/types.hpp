#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace obsent {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Validation tolerances shared across the library.
namespace tol {
inline constexpr double hermitian = 1e-10;
inline constexpr double trace_one = 1e-10;
inline constexpr double psd_floor = -1e-10;
inline constexpr double projector = 1e-10;
inline constexpr double orthogonality = 1e-10;
inline constexpr double completeness = 1e-10;
inline constexpr double kraus_completeness = 1e-10;
inline constexpr double volume_integer = 1e-8;
inline constexpr double degeneracy = 1e-8;        // relative to spectral range
inline constexpr double branch_volume_floor = 1e-12;
inline constexpr double probability_noise = 1e-9;
inline constexpr double probability_sum = 1e-9;
inline constexpr double volume_sum = 1e-6;
inline constexpr double classical_norm = 1e-10;
}  // namespace tol

class Error : public std::runtime_error {
 public:
  Error(const std::string& name, const std::string& message)
      : std::runtime_error(name + ": " + message), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

#define OBSENT_DEFINE_ERROR(NAME)                              \
  class NAME : public Error {                                  \
   public:                                                     \
    explicit NAME(const std::string& message)                  \
        : Error(#NAME, message) {}                             \
  }

OBSENT_DEFINE_ERROR(DimensionMismatch);
OBSENT_DEFINE_ERROR(NonHermitian);
OBSENT_DEFINE_ERROR(NotAState);
OBSENT_DEFINE_ERROR(NotADensity);
OBSENT_DEFINE_ERROR(NonCommuting);
OBSENT_DEFINE_ERROR(InconsistentBranch);
OBSENT_DEFINE_ERROR(PartitionMismatch);
OBSENT_DEFINE_ERROR(ZeroDensity);
OBSENT_DEFINE_ERROR(EmptyShell);
OBSENT_DEFINE_ERROR(ConfigError);
OBSENT_DEFINE_ERROR(ParseError);

#undef OBSENT_DEFINE_ERROR

// Raised when a model or scenario exceeds the configured size cap.
class CapExceeded : public ConfigError {
 public:
  explicit CapExceeded(const std::string& message) : ConfigError(message) {}
};

// Opaque macrostate label: an integer, a real number, a string, or a tuple
// of labels (product and sequence outcomes carry composite labels).
class Label {
 public:
  using Tuple = std::vector<Label>;

  Label() : value_(std::int64_t{0}) {}
  Label(std::int64_t v) : value_(v) {}
  Label(int v) : value_(std::int64_t{v}) {}
  Label(double v) : value_(v) {}
  Label(std::string v) : value_(std::move(v)) {}
  Label(const char* v) : value_(std::string(v)) {}
  Label(Tuple v) : value_(std::move(v)) {}

  bool is_integer() const { return std::holds_alternative<std::int64_t>(value_); }
  bool is_real() const { return std::holds_alternative<double>(value_); }
  bool is_text() const { return std::holds_alternative<std::string>(value_); }
  bool is_tuple() const { return std::holds_alternative<Tuple>(value_); }

  std::int64_t integer() const { return std::get<std::int64_t>(value_); }
  // Numeric value of an integer or real label.
  double number() const {
    return is_integer() ? static_cast<double>(std::get<std::int64_t>(value_))
                        : std::get<double>(value_);
  }
  const std::string& text() const { return std::get<std::string>(value_); }
  const Tuple& tuple() const { return std::get<Tuple>(value_); }

  std::string str() const;

  friend bool operator==(const Label& a, const Label& b) { return a.value_ == b.value_; }

 private:
  std::variant<std::int64_t, double, std::string, Tuple> value_;
};

}  // namespace obsent
