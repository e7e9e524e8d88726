#pragma once

// Domain types shared by the waveguide-QED scattering library.
//
// Unit conventions used throughout:
//   * rates and detunings are in units of the free-space decay rate Gamma0
//   * lengths are in nanometers
// Gamma0's absolute value never enters the scattering math.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wgqed {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Free-space decay rate assumed for unit conversion only (MHz).
inline constexpr double kGamma0MHz = 7.5;

enum class ErrorCode {
  NegativeRate,
  NonUnitVector,
  AsymmetricDdiOverride,
  InvalidDdiOverride,
  EmptyChain,
  NonFiniteValue,
  InvalidWaveguide,
  CoincidentEmitters,
  SingularSystem,
  SingularPhase,
  EmptySpectrum,
  InvalidArgument,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::NonUnitVector: return "NonUnitVector";
    case ErrorCode::AsymmetricDdiOverride: return "AsymmetricDdiOverride";
    case ErrorCode::InvalidDdiOverride: return "InvalidDdiOverride";
    case ErrorCode::EmptyChain: return "EmptyChain";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::InvalidWaveguide: return "InvalidWaveguide";
    case ErrorCode::CoincidentEmitters: return "CoincidentEmitters";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SingularPhase: return "SingularPhase";
    case ErrorCode::EmptySpectrum: return "EmptySpectrum";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(std::move(message)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

  /// Detuning at which a sweep failed, when the error came out of one.
  std::optional<double> detuning() const noexcept { return detuning_; }

  Error with_detuning(double delta) const {
    std::ostringstream os;
    os.precision(12);
    os << message_ << " (at delta = " << delta << ")";
    Error e(code_, os.str());
    e.detuning_ = delta;
    return e;
  }

 private:
  ErrorCode code_;
  std::string message_;
  std::optional<double> detuning_;
};

struct Emitter {
  Vec3 position = Vec3::Zero();  // nm
  double gamma_wg = 0.0;         // guided decay rate, Gamma0
  double gamma_loss = 0.0;       // non-guided decay rate, Gamma0
};

struct WaveguideParams {
  double lambda_guided = 0.0;      // guided-mode wavelength, nm
  double lambda_transition = 0.0;  // free-space transition wavelength, nm
  Vec3 propagation_axis = Vec3::UnitX();

  /// Guided wavenumber in rad/nm. Frequency independent over the detuning
  /// window (fixed-k approximation).
  double guided_wavenumber() const { return kTwoPi / lambda_guided; }
  double free_space_wavenumber() const { return kTwoPi / lambda_transition; }
};

struct DipoleOrientation {
  Vec3 direction = -Vec3::UnitY();
};

struct ChainConfig {
  std::vector<Emitter> emitters;
  WaveguideParams waveguide;
  DipoleOrientation dipole;
  std::optional<Eigen::MatrixXd> ddi_override;  // Omega_ij in Gamma0, N x N
  bool ddi_enabled = true;

  std::size_t size() const { return emitters.size(); }

  /// Position of emitter i projected onto the propagation axis (nm).
  double axial_position(std::size_t i) const {
    return emitters[i].position.dot(waveguide.propagation_axis);
  }
};

/// Photon detuning from the emitter transition, omega_k - omega_A, in Gamma0.
struct Detuning {
  double value = 0.0;

  constexpr Detuning() = default;
  constexpr explicit Detuning(double v) : value(v) {}
};

struct ScatteringResult {
  Complex t{1.0, 0.0};
  Complex r{0.0, 0.0};
  // Segment j lies between emitter j and j+1 (segment 0 is the input side,
  // segment N the output side); .first is the right-moving amplitude t_j,
  // .second the left-moving amplitude r_{j+1}. Empty for closed forms.
  std::vector<std::pair<Complex, Complex>> segment_amps;
  // Excitation amplitudes rescaled so that J_j e_j / v_g = sqrt(Gamma_j) x_j;
  // proportional to e_k^(j). Empty for closed forms.
  std::vector<Complex> excitations;

  double reflectance() const { return std::norm(r); }
  double transmittance() const { return std::norm(t); }
  double loss() const { return 1.0 - reflectance() - transmittance(); }
};

namespace detail {

inline bool finite(const Vec3& v) { return v.allFinite(); }

inline void require_unit(const Vec3& v, const char* what) {
  if (!v.allFinite()) {
    throw Error(ErrorCode::NonFiniteValue, std::string(what) + " has non-finite components");
  }
  if (std::abs(v.norm() - 1.0) > 1e-12) {
    throw Error(ErrorCode::NonUnitVector,
                std::string(what) + " must have unit norm (got " + std::to_string(v.norm()) + ")");
  }
}

inline void require_rate(double rate, const char* what, std::size_t index) {
  if (!std::isfinite(rate)) {
    throw Error(ErrorCode::NonFiniteValue,
                std::string(what) + " of emitter " + std::to_string(index) + " is not finite");
  }
  if (rate < 0.0) {
    throw Error(ErrorCode::NegativeRate, std::string(what) + " of emitter " +
                                             std::to_string(index) + " is negative (" +
                                             std::to_string(rate) + ")");
  }
}

}  // namespace detail

/// Checks every invariant of a chain configuration and returns a copy with
/// the emitters stably sorted along the propagation axis. An explicit DDI
/// override is permuted along with the emitters. Idempotent.
inline ChainConfig validate_chain(ChainConfig config) {
  if (config.emitters.empty()) {
    throw Error(ErrorCode::EmptyChain, "chain has no emitters");
  }

  const auto& wg = config.waveguide;
  if (!std::isfinite(wg.lambda_guided) || !std::isfinite(wg.lambda_transition)) {
    throw Error(ErrorCode::NonFiniteValue, "waveguide wavelengths must be finite");
  }
  if (wg.lambda_guided <= 0.0) {
    throw Error(ErrorCode::InvalidWaveguide, "lambda_guided must be positive");
  }
  if (wg.lambda_transition <= 0.0) {
    throw Error(ErrorCode::InvalidWaveguide, "lambda_transition must be positive");
  }
  detail::require_unit(wg.propagation_axis, "propagation_axis");
  detail::require_unit(config.dipole.direction, "dipole direction");

  const std::size_t n = config.emitters.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = config.emitters[i];
    if (!detail::finite(e.position)) {
      throw Error(ErrorCode::NonFiniteValue,
                  "position of emitter " + std::to_string(i) + " is not finite");
    }
    detail::require_rate(e.gamma_wg, "gamma_wg", i);
    detail::require_rate(e.gamma_loss, "gamma_loss", i);
  }

  if (config.ddi_override) {
    const auto& m = *config.ddi_override;
    if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != n) {
      throw Error(ErrorCode::InvalidDdiOverride,
                  "ddi override must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    if (!m.allFinite()) {
      throw Error(ErrorCode::NonFiniteValue, "ddi override has non-finite entries");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (m(i, i) != 0.0) {
        throw Error(ErrorCode::InvalidDdiOverride, "ddi override diagonal must be zero");
      }
      for (std::size_t j = i + 1; j < n; ++j) {
        const double tol = 1e-12 * std::max({1.0, std::abs(m(i, j)), std::abs(m(j, i))});
        if (std::abs(m(i, j) - m(j, i)) > tol) {
          throw Error(ErrorCode::AsymmetricDdiOverride,
                      "ddi override entries (" + std::to_string(i) + "," + std::to_string(j) +
                          ") and (" + std::to_string(j) + "," + std::to_string(i) + ") differ");
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return config.axial_position(a) < config.axial_position(b);
  });

  if (!std::is_sorted(order.begin(), order.end())) {
    std::vector<Emitter> sorted;
    sorted.reserve(n);
    for (auto idx : order) sorted.push_back(config.emitters[idx]);
    config.emitters = std::move(sorted);

    if (config.ddi_override) {
      const Eigen::MatrixXd& m = *config.ddi_override;
      Eigen::MatrixXd permuted(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) permuted(i, j) = m(order[i], order[j]);
      config.ddi_override = std::move(permuted);
    }
  }
  return config;
}

}  // namespace wgqed
