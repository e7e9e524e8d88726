#pragma once

// Spectral sweeps and feature extraction on reflection spectra.

#include "wgqed/core.hpp"
#include "wgqed/ddi.hpp"
#include "wgqed/parallel.hpp"
#include "wgqed/scattering.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace wgqed {

struct Spectrum {
  std::vector<double> deltas;  // Gamma0, increasing
  std::vector<double> reflection;
  std::vector<double> transmission;
  std::vector<double> loss;  // 1 - R - T

  std::size_t size() const { return deltas.size(); }
};

/// A located extremum: detuning and the value of R there.
struct Extremum {
  double position = 0.0;
  double value = 0.0;
};

enum class BandwidthStatus {
  Ok,
  NoPeak,     // no sample reaches the threshold; bandwidth reported as 0
  Truncated,  // the high-R region touches the edge of the grid
};

inline const char* to_string(BandwidthStatus s) {
  switch (s) {
    case BandwidthStatus::Ok: return "ok";
    case BandwidthStatus::NoPeak: return "no_peak";
    case BandwidthStatus::Truncated: return "truncated";
  }
  return "unknown";
}

struct SpectralFeatures {
  std::vector<Extremum> peaks;
  std::vector<Extremum> minima;
  double bandwidth = 0.0;
  double threshold = 0.5;
  BandwidthStatus bandwidth_status = BandwidthStatus::NoPeak;
  // Edges of the high-R region, when one exists.
  double band_low = 0.0;
  double band_high = 0.0;
};

/// n uniformly spaced points from lo to hi inclusive; the last point is hi exactly.
inline std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  if (n == 1) return {lo};
  std::vector<double> grid(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo + step * static_cast<double>(i);
  grid.back() = hi;
  return grid;
}

/// Evaluates `solve(Detuning)` on every grid point. Rows come back in grid
/// order regardless of threading. Solver errors are rethrown carrying the
/// offending detuning.
template <class Solver>
Spectrum sweep_with(std::span<const double> deltas, Solver&& solve, unsigned threads = 0) {
  Spectrum s;
  const std::size_t n = deltas.size();
  s.deltas.assign(deltas.begin(), deltas.end());
  s.reflection.resize(n);
  s.transmission.resize(n);
  s.loss.resize(n);
  detail::parallel_for(
      n,
      [&](std::size_t i) {
        ScatteringResult res;
        try {
          res = solve(Detuning{deltas[i]});
        } catch (const Error& e) {
          throw e.with_detuning(deltas[i]);
        }
        s.reflection[i] = res.reflectance();
        s.transmission[i] = res.transmittance();
        s.loss[i] = 1.0 - s.reflection[i] - s.transmission[i];
      },
      threads);
  return s;
}

inline Spectrum sweep_spectrum(const ChainConfig& config, const DdiMatrix& ddi, double delta_min,
                               double delta_max, std::size_t n_points, unsigned threads = 0) {
  if (!(delta_min < delta_max)) {
    throw Error(ErrorCode::InvalidArgument, "delta_min must be smaller than delta_max");
  }
  if (n_points < 2) throw Error(ErrorCode::InvalidArgument, "a sweep needs at least 2 points");
  const auto grid = uniform_grid(delta_min, delta_max, n_points);
  return sweep_with(
      grid, [&](Detuning d) { return solve_chain(config, ddi, d); }, threads);
}

namespace detail {

// Vertex of the parabola through three points (x0 < x1 < x2).
inline Extremum parabolic_vertex(double x0, double y0, double x1, double y1, double x2,
                                 double y2) {
  const double d01 = (y1 - y0) / (x1 - x0);
  const double d12 = (y2 - y1) / (x2 - x1);
  const double curvature = (d12 - d01) / (x2 - x0);
  if (curvature == 0.0) return {x1, y1};
  const double slope_mid = d01 + curvature * (x1 - x0);  // derivative at x1
  const double shift = -slope_mid / (2.0 * curvature);
  // keep the vertex inside the bracketing interval
  const double x = std::clamp(x1 + shift, x0, x2);
  const double dx = x - x1;
  return {x, y1 + slope_mid * dx + curvature * dx * dx};
}

inline double interpolate_crossing(double xa, double ya, double xb, double yb, double level) {
  if (ya == yb) return xa;
  return xa + (level - ya) * (xb - xa) / (yb - ya);
}

}  // namespace detail

/// Local extrema of R from sign changes of the discrete differences (equal
/// runs are collapsed), refined by three-point parabolic interpolation, plus
/// the width of the contiguous region with R >= threshold around the global
/// maximum.
inline SpectralFeatures find_features(const Spectrum& spectrum, double threshold = 0.5) {
  const std::size_t n = spectrum.deltas.size();
  if (n == 0) throw Error(ErrorCode::EmptySpectrum, "spectrum has no samples");
  if (spectrum.reflection.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "spectrum columns differ in length");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
  }

  const auto& x = spectrum.deltas;
  const auto& y = spectrum.reflection;
  SpectralFeatures f;
  f.threshold = threshold;

  std::size_t i = 1;
  while (i + 1 < n) {
    std::size_t k = i;
    while (k + 1 < n && y[k + 1] == y[i]) ++k;
    if (k + 1 >= n) break;
    const bool is_peak = y[i - 1] < y[i] && y[k + 1] < y[k];
    const bool is_min = y[i - 1] > y[i] && y[k + 1] > y[k];
    if (is_peak || is_min) {
      Extremum e;
      if (k == i) {
        e = detail::parabolic_vertex(x[i - 1], y[i - 1], x[i], y[i], x[i + 1], y[i + 1]);
        if (is_min) e.value = std::max(e.value, 0.0);
      } else {
        e = {0.5 * (x[i] + x[k]), y[i]};
      }
      (is_peak ? f.peaks : f.minima).push_back(e);
    }
    i = k + 1;
  }

  const std::size_t top =
      static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  if (y[top] < threshold) {
    f.bandwidth = 0.0;
    f.bandwidth_status = BandwidthStatus::NoPeak;
    return f;
  }

  f.bandwidth_status = BandwidthStatus::Ok;
  std::size_t lo = top;
  while (lo > 0 && y[lo - 1] >= threshold) --lo;
  std::size_t hi = top;
  while (hi + 1 < n && y[hi + 1] >= threshold) ++hi;

  if (lo == 0) {
    f.band_low = x.front();
    f.bandwidth_status = BandwidthStatus::Truncated;
  } else {
    f.band_low = detail::interpolate_crossing(x[lo - 1], y[lo - 1], x[lo], y[lo], threshold);
  }
  if (hi + 1 == n) {
    f.band_high = x.back();
    f.bandwidth_status = BandwidthStatus::Truncated;
  } else {
    f.band_high = detail::interpolate_crossing(x[hi], y[hi], x[hi + 1], y[hi + 1], threshold);
  }
  f.bandwidth = f.band_high - f.band_low;
  return f;
}

enum class ExtremumKind { Maximum, Minimum };
enum class Observable { Reflectance, Transmittance };

/// Re-scans R or T between lo and hi with Brent's method on the full solver.
inline Extremum refine_extremum(const ChainConfig& config, const DdiMatrix& ddi, double lo,
                                double hi, ExtremumKind kind,
                                Observable what = Observable::Reflectance) {
  const double sign = kind == ExtremumKind::Maximum ? -1.0 : 1.0;
  const auto eval = [&](double delta) {
    const auto res = solve_chain(config, ddi, Detuning{delta});
    return what == Observable::Reflectance ? res.reflectance() : res.transmittance();
  };
  const auto [pos, val] = boost::math::tools::brent_find_minima(
      [&](double d) { return sign * eval(d); }, lo, hi, std::numeric_limits<double>::digits / 2);
  return {pos, sign * val};
}

/// Lossless analytic feature positions for two identical emitters.
struct TwoEmitterPrediction {
  // Perfect-reflection detunings -/+ sqrt(2 Gamma Omega sin kl + Omega^2);
  // absent when the radicand is negative.
  std::optional<std::pair<double, double>> rmax;
  // Reflection zero -Gamma tan kl - Omega sec kl; absent (unbounded) at
  // kl = pi/2 mod pi.
  std::optional<double> rmin;
  // kl = 0 mod pi: numerator and denominator share a zero, the spectrum shows
  // one peak shifted to `shifted_peak` instead of a split pair.
  bool shift_only = false;
  double shifted_peak = 0.0;
};

inline constexpr double kPhaseTolerance = 1e-12;

inline TwoEmitterPrediction predict_two_emitter_features(double gamma_wg, double kl,
                                                         double omega) {
  TwoEmitterPrediction p;
  const double s = std::sin(kl);
  const double c = std::cos(kl);

  const double radicand = 2.0 * gamma_wg * omega * s + omega * omega;
  if (radicand >= 0.0) {
    const double root = std::sqrt(radicand);
    p.rmax = std::pair{-root, root};
  }
  if (std::abs(c) > kPhaseTolerance) {
    p.rmin = -gamma_wg * s / c - omega / c;
  }
  if (std::abs(s) <= kPhaseTolerance) {
    p.shift_only = true;
    p.shifted_peak = c > 0.0 ? omega : -omega;
  }
  return p;
}

/// Inverts the Fano-minimum position: Omega = -Delta_min cos kl - Gamma sin kl.
/// Exact for lossless emitters; approximate when gamma_loss is small
/// compared to gamma_wg.
inline double estimate_ddi_from_fano(Detuning delta_rmin, double gamma_wg, double kl) {
  const double c = std::cos(kl);
  if (std::abs(c) <= 1e-9) {
    throw Error(ErrorCode::SingularPhase,
                "kl = pi/2 mod pi: the Fano minimum carries no information on Omega");
  }
  return -delta_rmin.value * c - gamma_wg * std::sin(kl);
}

/// R on a (kl, delta) grid, stored row-major with one row per kl.
struct ReflectionMap {
  std::vector<double> kl;
  std::vector<double> deltas;
  std::vector<double> reflection;

  double at(std::size_t kl_index, std::size_t delta_index) const {
    return reflection[kl_index * deltas.size() + delta_index];
  }
};

/// Chain rebuilt with uniform axial gap kl * lambda_guided / 2pi. Transverse
/// offsets and the first emitter's position are kept.
inline ChainConfig with_gap_phase(const ChainConfig& tmpl, double kl) {
  ChainConfig cfg = tmpl;
  const Vec3& axis = tmpl.waveguide.propagation_axis;
  const double gap = kl * tmpl.waveguide.lambda_guided / kTwoPi;
  const double origin = tmpl.axial_position(0);
  for (std::size_t j = 0; j < cfg.size(); ++j) {
    const double target = origin + gap * static_cast<double>(j);
    cfg.emitters[j].position += (target - tmpl.axial_position(j)) * axis;
  }
  return cfg;
}

/// Reflection map over (kl, delta). With ddi_enabled the coupling is the
/// template's override when present, otherwise recomputed from geometry for
/// every kl; without it the coupling is zero.
inline ReflectionMap sweep_map(const ChainConfig& config_template, std::span<const double> delta_grid,
                               std::span<const double> kl_grid, bool ddi_enabled,
                               unsigned threads = 0) {
  const ChainConfig tmpl = validate_chain(config_template);
  if (delta_grid.empty() || kl_grid.empty()) {
    throw Error(ErrorCode::InvalidArgument, "map grids must not be empty");
  }
  const auto gaps = gap_phases(tmpl);
  for (const auto& g : gaps) {
    if (std::abs(g.kl - gaps.front().kl) > 1e-9 * std::max(1.0, std::abs(gaps.front().kl))) {
      throw Error(ErrorCode::InvalidArgument, "map template must have uniform gaps");
    }
  }
  for (double kl : kl_grid) {
    if (!std::isfinite(kl) || kl < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "kl grid values must be finite and non-negative");
    }
  }

  std::vector<ChainConfig> rows;
  std::vector<DdiMatrix> couplings;
  rows.reserve(kl_grid.size());
  couplings.reserve(kl_grid.size());
  for (double kl : kl_grid) {
    ChainConfig cfg = with_gap_phase(tmpl, kl);
    cfg.ddi_enabled = ddi_enabled;
    if (!ddi_enabled) cfg.ddi_override.reset();
    try {
      couplings.push_back(build_ddi_matrix(cfg));
    } catch (const Error& e) {
      throw Error(e.code(), e.message() + " (at kl = " + std::to_string(kl) + ")");
    }
    rows.push_back(std::move(cfg));
  }

  ReflectionMap map;
  map.kl.assign(kl_grid.begin(), kl_grid.end());
  map.deltas.assign(delta_grid.begin(), delta_grid.end());
  const std::size_t nd = delta_grid.size();
  map.reflection.resize(kl_grid.size() * nd);
  detail::parallel_for(
      map.reflection.size(),
      [&](std::size_t idx) {
        const std::size_t row = idx / nd;
        const double delta = delta_grid[idx % nd];
        try {
          map.reflection[idx] = solve_chain(rows[row], couplings[row], Detuning{delta}).reflectance();
        } catch (const Error& e) {
          throw e.with_detuning(delta);
        }
      },
      threads);
  return map;
}

}  // namespace wgqed
