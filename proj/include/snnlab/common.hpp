#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace snnlab {

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

using ArrayXf = ArrayX<float>;
using ArrayXd = ArrayX<double>;

/// Row-major dimensions of a dense tensor. Rank 1 is a plain vector,
/// rank 2 is (rows, cols), images are (channels, height, width).
using Shape = std::vector<int>;

inline Eigen::Index shape_numel(const Shape& shape) {
  Eigen::Index n = 1;
  for (int d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes.
struct DimensionError : Error {
  using Error::Error;
};

/// A precondition of an operation was violated (non-scalar backward seed,
/// empty range, dimension too large for enumeration, ...).
struct ContractError : Error {
  using Error::Error;
};

/// Malformed external file (IDX magic, truncated payload, bad config).
struct FormatError : Error {
  using Error::Error;
};

/// Training aborted (non-finite loss).
struct TrainingError : Error {
  using Error::Error;
};

}  // namespace snnlab
