#pragma once

// Single-photon scattering amplitudes for a chain of emitters side-coupled to
// a one-dimensional waveguide.
//
// Phase convention: the input reference plane sits at the first emitter and
// the output reference plane at the last one, so a single emitter carries no
// propagation phase and t = 1 + r. The closed forms below are written in the
// same convention as solve_chain; the textbook two-emitter expressions for t
// carry an additional global factor e^{-ikL}.

#include "wgqed/core.hpp"
#include "wgqed/ddi.hpp"

#include <concepts>
#include <vector>

namespace wgqed {

/// Propagation phase k * (x_{j+1} - x_j) between consecutive emitters.
struct PhasedGap {
  double kl = 0.0;
};

/// Phases between consecutive emitters, computed from the guided wavelength
/// only (fixed-k approximation). Length N - 1.
inline std::vector<PhasedGap> gap_phases(const ChainConfig& config) {
  std::vector<PhasedGap> gaps;
  if (config.size() < 2) return gaps;
  gaps.reserve(config.size() - 1);
  const double k = config.waveguide.guided_wavenumber();
  for (std::size_t j = 0; j + 1 < config.size(); ++j) {
    gaps.push_back({k * (config.axial_position(j + 1) - config.axial_position(j))});
  }
  return gaps;
}

template <std::floating_point Real>
struct Amplitudes {
  std::complex<Real> t;
  std::complex<Real> r;
};

namespace closed_form {

template <std::floating_point Real>
Amplitudes<Real> single_emitter(Real delta, Real gamma_wg, Real gamma_loss) {
  using C = std::complex<Real>;
  const C i(0, 1);
  const C d = delta + i * gamma_loss / Real(2);
  const C den = i * gamma_wg + d;
  return {d / den, -i * gamma_wg / den};
}

template <std::floating_point Real>
Amplitudes<Real> two_emitter_symmetric(Real delta, Real gamma_wg, Real gamma_loss, Real kl,
                                       Real omega) {
  using C = std::complex<Real>;
  const C i(0, 1);
  const C e = std::polar(Real(1), kl);
  const C e2 = e * e;
  const C d = delta + i * gamma_loss / Real(2);
  const Real g = gamma_wg;
  const C den = (e2 - Real(1)) * g * g + Real(2) * i * g * (d + e * omega) + d * d - omega * omega;
  const C t_num = -i * g * omega + i * e2 * g * omega + e * (d * d - omega * omega);
  const C r_num = (Real(1) - e2) * g * g - i * g * ((Real(1) + e2) * d + Real(2) * e * omega);
  return {t_num / den, r_num / den};
}

template <std::floating_point Real>
struct SymmetricNoDdiTerms {
  std::complex<Real> t_num;
  std::complex<Real> r_num;
  std::complex<Real> local;     // (d + i Gamma)^2
  std::complex<Real> mediated;  // Gamma^2 e^{2ikL}, waveguide-mediated coupling
};

// Denominator split as (d + i Gamma)^2 + Gamma^2 e^{2ikL}.
template <std::floating_point Real>
SymmetricNoDdiTerms<Real> symmetric_no_ddi_terms(Real delta, Real gamma_wg, Real gamma_loss,
                                                 Real kl) {
  using C = std::complex<Real>;
  const C i(0, 1);
  const C e = std::polar(Real(1), kl);
  const C e2 = e * e;
  const C d = delta + i * gamma_loss / Real(2);
  const Real g = gamma_wg;
  return {e * d * d, (Real(1) - e2) * g * g - i * g * (Real(1) + e2) * d, (d + i * g) * (d + i * g),
          g * g * e2};
}

template <std::floating_point Real>
Amplitudes<Real> two_emitter_symmetric_no_ddi(Real delta, Real gamma_wg, Real gamma_loss,
                                              Real kl) {
  const auto terms = symmetric_no_ddi_terms(delta, gamma_wg, gamma_loss, kl);
  const auto den = terms.local + terms.mediated;
  return {terms.t_num / den, terms.r_num / den};
}

template <std::floating_point Real>
Amplitudes<Real> two_emitter_asymmetric(Real delta, Real gamma_wg_1, Real gamma_loss_1,
                                        Real gamma_wg_2, Real gamma_loss_2, Real kl, Real omega) {
  using C = std::complex<Real>;
  const C i(0, 1);
  const C e = std::polar(Real(1), kl);
  const C e2 = e * e;
  const C d1 = delta + i * gamma_loss_1 / Real(2);
  const C d2 = delta + i * gamma_loss_2 / Real(2);
  const Real g12 = gamma_wg_1 * gamma_wg_2;
  const Real s = std::sqrt(g12);
  const C den = (e2 - Real(1)) * g12 + i * (gamma_wg_1 * d2 + gamma_wg_2 * d1) +
                Real(2) * i * e * s * omega + d1 * d2 - omega * omega;
  const C t_num = -i * s * omega + i * e2 * s * omega + e * (d1 * d2 - omega * omega);
  const C r_num = (Real(1) - e2) * g12 - i * e2 * gamma_wg_2 * d1 - i * gamma_wg_1 * d2 -
                  Real(2) * i * e * s * omega;
  return {t_num / den, r_num / den};
}

template <std::floating_point Real>
Amplitudes<Real> two_emitter_asymmetric_no_ddi(Real delta, Real gamma_wg_1, Real gamma_loss_1,
                                               Real gamma_wg_2, Real gamma_loss_2, Real kl) {
  using C = std::complex<Real>;
  const C i(0, 1);
  const C e = std::polar(Real(1), kl);
  const C e2 = e * e;
  const C d1 = delta + i * gamma_loss_1 / Real(2);
  const C d2 = delta + i * gamma_loss_2 / Real(2);
  const Real g12 = gamma_wg_1 * gamma_wg_2;
  const C den = (e2 - Real(1)) * g12 + i * (gamma_wg_1 * d2 + gamma_wg_2 * d1) + d1 * d2;
  const C r_num = (Real(1) - e2) * g12 - i * e2 * gamma_wg_2 * d1 - i * gamma_wg_1 * d2;
  return {e * d1 * d2 / den, r_num / den};
}

}  // namespace closed_form

namespace detail {

inline ScatteringResult to_result(const Amplitudes<double>& a) {
  ScatteringResult res;
  res.t = a.t;
  res.r = a.r;
  return res;
}

}  // namespace detail

inline ScatteringResult single_emitter(Detuning delta, double gamma_wg, double gamma_loss) {
  return detail::to_result(closed_form::single_emitter(delta.value, gamma_wg, gamma_loss));
}

inline ScatteringResult two_emitter_symmetric(Detuning delta, double gamma_wg, double gamma_loss,
                                              double kl, double omega) {
  return detail::to_result(
      closed_form::two_emitter_symmetric(delta.value, gamma_wg, gamma_loss, kl, omega));
}

inline ScatteringResult two_emitter_symmetric_no_ddi(Detuning delta, double gamma_wg,
                                                     double gamma_loss, double kl) {
  return detail::to_result(
      closed_form::two_emitter_symmetric_no_ddi(delta.value, gamma_wg, gamma_loss, kl));
}

inline ScatteringResult two_emitter_asymmetric(Detuning delta, double gamma_wg_1,
                                               double gamma_loss_1, double gamma_wg_2,
                                               double gamma_loss_2, double kl, double omega) {
  return detail::to_result(closed_form::two_emitter_asymmetric(
      delta.value, gamma_wg_1, gamma_loss_1, gamma_wg_2, gamma_loss_2, kl, omega));
}

inline ScatteringResult two_emitter_asymmetric_no_ddi(Detuning delta, double gamma_wg_1,
                                                      double gamma_loss_1, double gamma_wg_2,
                                                      double gamma_loss_2, double kl) {
  return detail::to_result(closed_form::two_emitter_asymmetric_no_ddi(
      delta.value, gamma_wg_1, gamma_loss_1, gamma_wg_2, gamma_loss_2, kl));
}

/// Largest accepted condition number estimate of the scattering system.
inline constexpr double kMaxConditionNumber = 1e14;

/// Solves the 3N x 3N scattering system for one detuning.
///
/// Unknowns are the right-moving amplitudes t_1..t_N, the left-moving
/// amplitudes r_1..r_N and the rescaled excitations x_1..x_N, with t_0 = 1
/// and r_{N+1} = 0. For emitter j (gap phase phi_j to the next emitter,
/// phi_N = 0 so the output plane is the last emitter):
///
///   t_j e^{-i phi_j} - t_{j-1} + i sqrt(G_j) x_j = 0
///   r_{j+1} e^{i phi_j} - r_j - i sqrt(G_j) x_j = 0
///   sqrt(G_j) (t_{j-1} + r_j) + sum_{i != j} Omega_ji x_i - (Delta + i G'_j / 2) x_j = 0
///
/// Throws SingularSystem when the condition estimate exceeds 1e14.
inline ScatteringResult solve_chain(const ChainConfig& config, const DdiMatrix& ddi,
                                    Detuning delta) {
  const std::size_t n = config.size();
  if (n == 0) throw Error(ErrorCode::EmptyChain, "chain has no emitters");
  if (ddi.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "ddi matrix dimension " + std::to_string(ddi.size()) +
                                                " does not match chain size " + std::to_string(n));
  }
  if (!std::isfinite(delta.value)) {
    throw Error(ErrorCode::NonFiniteValue, "detuning is not finite");
  }

  const auto gaps = gap_phases(config);
  const Complex i(0.0, 1.0);
  const auto dim = static_cast<Eigen::Index>(3 * n);
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(dim);

  const auto ti = [](std::size_t j) { return static_cast<Eigen::Index>(j); };
  const auto ri = [n](std::size_t j) { return static_cast<Eigen::Index>(n + j); };
  const auto xi = [n](std::size_t j) { return static_cast<Eigen::Index>(2 * n + j); };

  for (std::size_t j = 0; j < n; ++j) {
    const auto& em = config.emitters[j];
    const double s = std::sqrt(em.gamma_wg);
    const bool last = j + 1 == n;
    const Complex fwd = last ? Complex(1.0) : std::polar(1.0, -gaps[j].kl);

    const auto row_t = static_cast<Eigen::Index>(j);
    a(row_t, ti(j)) = fwd;
    a(row_t, xi(j)) = i * s;
    if (j == 0) {
      b(row_t) = 1.0;
    } else {
      a(row_t, ti(j - 1)) = -1.0;
    }

    const auto row_r = static_cast<Eigen::Index>(n + j);
    a(row_r, ri(j)) = -1.0;
    a(row_r, xi(j)) = -i * s;
    if (!last) a(row_r, ri(j + 1)) = std::polar(1.0, gaps[j].kl);

    const auto row_e = static_cast<Eigen::Index>(2 * n + j);
    if (j == 0) {
      b(row_e) = -s;
    } else {
      a(row_e, ti(j - 1)) = s;
    }
    a(row_e, ri(j)) = s;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) a(row_e, xi(k)) = ddi(j, k);
    }
    a(row_e, xi(j)) = -(delta.value + i * em.gamma_loss / 2.0);
  }

  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  // rcond() reports 1 for an exactly zero pivot, so check the pivots as well
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double rcond = std::min(lu.rcond(), pivots.minCoeff() / pivots.maxCoeff());
  if (!(rcond * kMaxConditionNumber >= 1.0)) {
    throw Error(ErrorCode::SingularSystem,
                "scattering system is numerically singular (rcond = " + std::to_string(rcond) + ")");
  }
  const Eigen::VectorXcd sol = lu.solve(b);
  if (!sol.allFinite()) {
    throw Error(ErrorCode::SingularSystem, "scattering solution is not finite");
  }

  ScatteringResult res;
  res.t = sol(ti(n - 1));
  res.r = sol(ri(0));
  res.segment_amps.reserve(n + 1);
  res.segment_amps.emplace_back(Complex(1.0), sol(ri(0)));
  for (std::size_t j = 0; j + 1 < n; ++j) res.segment_amps.emplace_back(sol(ti(j)), sol(ri(j + 1)));
  res.segment_amps.emplace_back(sol(ti(n - 1)), Complex(0.0));
  res.excitations.reserve(n);
  for (std::size_t j = 0; j < n; ++j) res.excitations.push_back(sol(xi(j)));
  return res;
}

}  // namespace wgqed
