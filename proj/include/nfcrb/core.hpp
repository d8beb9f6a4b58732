#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace nfcrb {

using cdouble = std::complex<double>;
using MatXd = Eigen::MatrixXd;
using MatXcd = Eigen::MatrixXcd;
using VecXd = Eigen::VectorXd;
using VecXcd = Eigen::VectorXcd;
using Vec2d = Eigen::Vector2d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Error hierarchy. Everything the library throws derives from nfcrb::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (nonpositive range, shape mismatch, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Geometry where an angle or distance formula divides by zero.
class SingularGeometryError : public Error {
 public:
  using Error::Error;
};

// Least-squares geometry system without a unique solution.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

// Matrix that must be inverted is (numerically) singular.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, double smallest_eigenvalue)
      : Error(what), smallest_eigenvalue_(smallest_eigenvalue) {}
  double smallest_eigenvalue() const { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

// Malformed scenario file; path() is a JSON-pointer-like location such as "/signals/1/freq_hz".
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

// Wraps an angle into [0, 2*pi).
inline double wrap_two_pi(double angle) {
  double wrapped = std::fmod(angle, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

// Evaluates fn(0..count-1) on a few worker threads; results keep input order.
template <typename Fn>
auto parallel_map(std::size_t count, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> out(count);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) out[i] = fn(i);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace detail

}  // namespace nfcrb
