#ifndef ADVSCALE_SCALING_LAW_HPP
#define ADVSCALE_SCALING_LAW_HPP

#include <cmath>

#include "advscale/error.hpp"

namespace advscale {

// Data quality enters both forms through log(1 + 1/Quality) = log(1 + FID),
// which is finite at FID = 0 where Quality itself is infinite.
inline double quality_log_term(double fid) { return std::log1p(fid); }

/// Additive power law whose data-dependent coefficient B and irreducible loss
/// E are rescaled by data quality:
///
///   L = A / N^alpha + B' / D^beta + E'
///   E' = exp(log E + log(1 + FID) * epsilon)
///   B' = exp(log B + log(1 + FID) * zeta)
struct Approach2Params {
  double A = 0.0;
  double B = 0.0;
  double E = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  double zeta = 0.0;

  /// Published constants, fitted on filtered DG + EDM-7/10/20 runs.
  static Approach2Params published() { return {6.69, 9.89, 0.48, 0.24, 0.23, 0.16, -0.28}; }

  double effective_E(double fid) const {
    return std::exp(std::log(E) + quality_log_term(fid) * epsilon);
  }
  double effective_B(double fid) const {
    return std::exp(std::log(B) + quality_log_term(fid) * zeta);
  }

  bool operator==(const Approach2Params&) const = default;
};

/// Power law with a data-quality bottleneck on the dataset term:
///
///   L = A / N^alpha + (B / D + (Q * FID)^(kappa / beta))^beta + E'
///   E' = E + log(1 + FID) * epsilon
struct Approach3Params {
  double A = 0.0;
  double B = 0.0;
  double E = 0.0;
  double Q = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double kappa = 0.0;
  double epsilon = 0.0;

  static Approach3Params published() {
    return {6.0, 7000.0, 0.52, 0.007, 0.24, 0.22, 0.6, 0.04};
  }

  double effective_E(double fid) const { return E + quality_log_term(fid) * epsilon; }

  // (Q * FID)^(kappa / beta); zero for a perfect generator.
  double quality_floor(double fid) const {
    return fid > 0.0 ? std::pow(Q * fid, kappa / beta) : 0.0;
  }

  /// Loss as N, D -> infinity.
  double asymptote(double fid) const {
    return std::pow(quality_floor(fid), beta) + effective_E(fid);
  }

  bool operator==(const Approach3Params&) const = default;
};

namespace detail {

inline void require_sizes(double n, double d, double fid) {
  if (!(n > 0.0) || !(d > 0.0)) throw DomainError("loss requires n > 0 and d > 0");
  if (!(fid >= 0.0)) throw DomainError("loss requires fid >= 0");
}

}  // namespace detail

inline double loss_v2(double n, double d, double fid, const Approach2Params& p) {
  detail::require_sizes(n, d, fid);
  return p.A / std::pow(n, p.alpha) + p.effective_B(fid) / std::pow(d, p.beta) +
         p.effective_E(fid);
}

inline double loss_v3(double n, double d, double fid, const Approach3Params& p) {
  detail::require_sizes(n, d, fid);
  return p.A / std::pow(n, p.alpha) + std::pow(p.B / d + p.quality_floor(fid), p.beta) +
         p.effective_E(fid);
}

}  // namespace advscale

#endif  // ADVSCALE_SCALING_LAW_HPP
