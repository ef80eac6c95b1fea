#pragma once

#include <Eigen/Core>

#include <limits>
#include <stdexcept>
#include <string>

namespace gtwalk {

/// Largest ambient/chart dimension supported. Vectors live on the stack up to
/// this size so the stepping loops never touch the heap.
inline constexpr int kMaxDim = 12;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                             kMaxDim, kMaxDim>;

/// Points are stored as ambient coordinates for embedded models and chart
/// coordinates otherwise.
using Point = Vector;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class ErrorKind {
  InvalidInput,
  Degenerate,
  Unsupported,
  Domain,
  Numerical,
  Parse,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace gtwalk
