#ifndef POLYMERLAB_COMMON_HPP
#define POLYMERLAB_COMMON_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polymerlab {

/// Error taxonomy shared by every module. The CLI maps `kind` to exit codes:
/// validation errors -> 2, numerical errors -> 3.
enum class ErrorKind {
  invalid_parameter,
  invalid_bracket,
  invalid_reference,
  unsupported_mode,
  unsupported_order,
  out_of_domain,
  singularity,
  path_escape,
  numerical_overflow,
  supercritical_beta,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, std::string op, const std::string& what)
      : std::runtime_error(module + "." + op + ": " + what),
        kind_(kind), module_(std::move(module)), op_(std::move(op)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& module_name() const { return module_; }
  const std::string& op_name() const { return op_; }

  bool is_validation() const {
    switch (kind_) {
      case ErrorKind::invalid_parameter:
      case ErrorKind::invalid_bracket:
      case ErrorKind::invalid_reference:
      case ErrorKind::unsupported_mode:
      case ErrorKind::unsupported_order:
      case ErrorKind::io:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string op_;
};

using Point = std::vector<double>;
using PointView = std::span<const double>;

inline double norm2_sq(PointView x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

inline Point e1_scaled(int dim, double r) {
  Point p(static_cast<size_t>(dim), 0.0);
  p[0] = r;
  return p;
}

}  // namespace polymerlab

#endif
