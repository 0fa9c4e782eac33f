#pragma once

#include "snnlab/common.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace snnlab {

enum class SurrogateFamily { kTriangle, kSigmoid, kArctan };

/// Surrogate derivative family for the spike nonlinearity, plus its width.
/// Only the backward pass depends on it; the forward spike is always the
/// hard step function.
struct SurrogateSpec {
  SurrogateFamily family = SurrogateFamily::kTriangle;
  double gamma = 1.0;
};

inline void validate(const SurrogateSpec& spec) {
  if (!(spec.gamma > 0.0)) throw ContractError("surrogate gamma must be > 0");
}

inline const char* to_string(SurrogateFamily f) {
  switch (f) {
    case SurrogateFamily::kTriangle: return "triangle";
    case SurrogateFamily::kSigmoid: return "sigmoid";
    case SurrogateFamily::kArctan: return "arctan";
  }
  return "?";
}

inline SurrogateFamily surrogate_family_from_string(const std::string& s) {
  if (s == "triangle") return SurrogateFamily::kTriangle;
  if (s == "sigmoid") return SurrogateFamily::kSigmoid;
  if (s == "arctan") return SurrogateFamily::kArctan;
  throw FormatError("unknown surrogate family: " + s);
}

/// Numerically stable logistic function.
template <typename S>
S logistic_value(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  S e = std::exp(x);
  return e / (S(1) + e);
}

/// Derivative substituted for dH/du in the backward pass, evaluated at
/// v = u - theta.
///   triangle: (1/g^2) * max(0, g - |v|)
///   sigmoid:  g * sig(g v) * (1 - sig(g v))
///   arctan:   g / (2 * (1 + ((pi/2) g v)^2))
template <typename S>
S surrogate_derivative(const SurrogateSpec& spec, S v) {
  const S g = static_cast<S>(spec.gamma);
  switch (spec.family) {
    case SurrogateFamily::kTriangle: {
      S w = g - std::abs(v);
      return w > S(0) ? w / (g * g) : S(0);
    }
    case SurrogateFamily::kSigmoid: {
      S s = logistic_value(g * v);
      return g * s * (S(1) - s);
    }
    case SurrogateFamily::kArctan: {
      S t = static_cast<S>(std::numbers::pi / 2) * g * v;
      return g / (S(2) * (S(1) + t * t));
    }
  }
  return S(0);
}

}  // namespace snnlab
