#pragma once

// Direct dipole-dipole interaction between emitters.

#include "wgqed/core.hpp"

namespace wgqed {

/// Symmetric N x N matrix of Omega_ij in units of Gamma0 with zero diagonal.
struct DdiMatrix {
  Eigen::MatrixXd omega;

  std::size_t size() const { return static_cast<std::size_t>(omega.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return omega(i, j); }

  static DdiMatrix zero(std::size_t n) { return {Eigen::MatrixXd::Zero(n, n)}; }
};

/// Coincidence threshold below which the near-field expression diverges (nm).
inline constexpr double kCoincidenceTolerance = 1e-9;

// Omega_ij = 3/4 [ (cos x/x^3 + sin x/x^2 - cos x/x)
//                + cos^2(theta) (cos x/x - 3 cos x/x^3 - 3 sin x/x^2) ]
// with x = (2 pi / lambda_transition) |r_i - r_j| (free-space wavenumber) and
// theta the angle between the dipole and the separation vector.
inline double pair_ddi(const Vec3& r_i, const Vec3& r_j, double lambda_transition,
                       const DipoleOrientation& dipole) {
  if (!(lambda_transition > 0.0)) {
    throw Error(ErrorCode::InvalidWaveguide, "lambda_transition must be positive");
  }
  const Vec3 sep = r_i - r_j;
  const double dist = sep.norm();
  if (dist < kCoincidenceTolerance) {
    throw Error(ErrorCode::CoincidentEmitters,
                "emitters closer than " + std::to_string(kCoincidenceTolerance) + " nm");
  }

  const double x = kTwoPi * dist / lambda_transition;
  const double proj = dipole.direction.dot(sep) / dist;
  const double cos2 = proj * proj;

  const double c = std::cos(x);
  const double s = std::sin(x);
  const double x2 = x * x;
  const double x3 = x2 * x;

  const double isotropic = c / x3 + s / x2 - c / x;
  const double axial = c / x - 3.0 * c / x3 - 3.0 * s / x2;
  return 0.75 * (isotropic + cos2 * axial);
}

/// Coupling matrix used by the solver. An explicit override wins, then the
/// disabled flag, then geometry. Each unordered pair enters the j-th
/// emitter equation once with coefficient Omega_ji.
inline DdiMatrix build_ddi_matrix(const ChainConfig& config) {
  const std::size_t n = config.size();
  if (config.ddi_override) return {*config.ddi_override};
  if (!config.ddi_enabled) return DdiMatrix::zero(n);

  DdiMatrix m = DdiMatrix::zero(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double omega = 0.0;
      try {
        omega = pair_ddi(config.emitters[i].position, config.emitters[j].position,
                         config.waveguide.lambda_transition, config.dipole);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::CoincidentEmitters) throw;
        throw Error(ErrorCode::CoincidentEmitters,
                    "emitters " + std::to_string(i) + " and " + std::to_string(j) +
                        " coincide; geometric DDI is undefined");
      }
      m.omega(i, j) = omega;
      m.omega(j, i) = omega;
    }
  }
  return m;
}

}  // namespace wgqed
