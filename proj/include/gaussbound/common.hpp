#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gaussbound {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Vector>;
using Rng = std::mt19937_64;

inline constexpr double kLn2 = 0.69314718055994530942;

inline double nats_to_bits(double nats) { return nats / kLn2; }
inline double bits_to_nats(double bits) { return bits * kLn2; }

// Error taxonomy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class InvalidCovarianceError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModelError : public Error {
 public:
  using Error::Error;
};

/// Aligned observations of X (n x d_x) and Y (n x d_y).
struct PairedSamples {
  Matrix x;
  Matrix y;

  [[nodiscard]] Eigen::Index n() const { return x.rows(); }
  [[nodiscard]] Eigen::Index dx() const { return x.cols(); }
  [[nodiscard]] Eigen::Index dy() const { return y.cols(); }

  void validate() const {
    if (x.rows() != y.rows()) {
      throw ParameterError("paired samples: X has " + std::to_string(x.rows()) +
                           " rows but Y has " + std::to_string(y.rows()));
    }
    if (x.cols() < 1 || y.cols() < 1) {
      throw ParameterError("paired samples: both blocks need at least one column");
    }
  }
};

// splitmix64 finalizer; used to derive independent substreams from one seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace gaussbound
