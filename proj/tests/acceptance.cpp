// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed here and nowhere else.

#include "test_support.hpp"
#include "wgqed/io.hpp"

#include <fmt/format.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

using namespace wgqed;
namespace t = wgqed::testing;

struct Outcome {
  bool pass;
  std::string detail;
};

ChainConfig checked(const ChainConfig& raw) { return validate_chain(raw); }

double reflectance(const ChainConfig& cfg, const DdiMatrix& ddi, double delta) {
  return solve_chain(cfg, ddi, Detuning{delta}).reflectance();
}

// 1 -------------------------------------------------------------------------
Outcome ddi_regression() {
  constexpr double kRelTol = 0.005;
  const DipoleOrientation dip{};
  const struct {
    Vec3 a, b;
    double expected;
  } cases[] = {
      {{0, 17, 0}, {32.75, 17, 0}, 23.08},  {{0, 17, 0}, {52.95, 17, 0}, 5.12},
      {{0, 17, 0}, {105.9, 17, 0}, 0.61},   {{0, 17, 0}, {20, 37, 0}, -20.79},
      {{0, 17, 0}, {0, 49.75, 0}, -50.71},
  };
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const double got = pair_ddi(c.a, c.b, t::kLambdaTransition, dip);
    const double rel = std::abs(got - c.expected) / std::abs(c.expected);
    if (rel > kRelTol) ok = false;
    detail += fmt::format("{:.5g} vs {} ({:.2f}%); ", got, c.expected, 100 * rel);
  }
  return {ok, detail + "tolerance 0.5%"};
}

// 2 -------------------------------------------------------------------------
Outcome oracle_equivalence() {
  constexpr double kTol = 1e-12;
  constexpr int kDraws = 1000;
  t::Rng rng(2024);
  double worst[5] = {0, 0, 0, 0, 0};
  const auto track = [](double& w, const ScatteringResult& a, const ScatteringResult& b) {
    w = std::max({w, std::abs(a.transmittance() - b.transmittance()),
                  std::abs(a.reflectance() - b.reflectance())});
  };
  const auto rate = [&] { return rng.uniform(0, 20); };

  for (int k = 0; k < kDraws; ++k) {
    const double d = rng.uniform(-100, 100);
    const double g = rate(), l = rate();
    const auto cfg = checked(t::uniform_chain(1, 0.0, g, l, false));
    track(worst[0], solve_chain(cfg, build_ddi_matrix(cfg), Detuning{d}),
          single_emitter(Detuning{d}, g, l));
  }
  for (int k = 0; k < kDraws; ++k) {
    const double d = rng.uniform(-100, 100), kl = rng.uniform(0, kTwoPi);
    const double om = rng.uniform(-60, 60);
    const double g = rate(), l = rate();
    const auto cfg = checked(t::two_emitter_chain(g, l, g, l, kl, om));
    track(worst[1], solve_chain(cfg, build_ddi_matrix(cfg), Detuning{d}),
          two_emitter_symmetric(Detuning{d}, g, l, kl, om));
    const auto cfg0 = checked(t::two_emitter_chain(g, l, g, l, kl, 0.0));
    track(worst[2], solve_chain(cfg0, build_ddi_matrix(cfg0), Detuning{d}),
          two_emitter_symmetric_no_ddi(Detuning{d}, g, l, kl));
  }
  for (int k = 0; k < kDraws; ++k) {
    const double d = rng.uniform(-100, 100), kl = rng.uniform(0, kTwoPi);
    const double om = rng.uniform(-60, 60);
    const double g1 = rate(), l1 = rate(), g2 = rate(), l2 = rate();
    const auto cfg = checked(t::two_emitter_chain(g1, l1, g2, l2, kl, om));
    track(worst[3], solve_chain(cfg, build_ddi_matrix(cfg), Detuning{d}),
          two_emitter_asymmetric(Detuning{d}, g1, l1, g2, l2, kl, om));
    const auto cfg0 = checked(t::two_emitter_chain(g1, l1, g2, l2, kl, 0.0));
    track(worst[4], solve_chain(cfg0, build_ddi_matrix(cfg0), Detuning{d}),
          two_emitter_asymmetric_no_ddi(Detuning{d}, g1, l1, g2, l2, kl));
  }
  const double w = *std::max_element(std::begin(worst), std::end(worst));
  return {w <= kTol,
          fmt::format("max |d|t|^2|,|d|r|^2| single {:.2e}, symmetric {:.2e}, symmetric no-DDI "
                      "{:.2e}, asymmetric {:.2e}, asymmetric no-DDI {:.2e} over {} draws each; "
                      "tolerance 1e-12",
                      worst[0], worst[1], worst[2], worst[3], worst[4], kDraws)};
}

// 3 -------------------------------------------------------------------------
Outcome flux_conservation() {
  constexpr double kTol = 1e-9;
  constexpr int kSetsPerSize = 20;
  t::Rng rng(99);
  double worst = 0.0;
  const auto grid = uniform_grid(-100, 100, 401);
  for (std::size_t n : {1u, 2u, 3u, 5u, 10u}) {
    for (int s = 0; s < kSetsPerSize; ++s) {
      std::vector<Emitter> rates;
      std::vector<double> kls;
      Eigen::MatrixXd om = Eigen::MatrixXd::Zero(n, n);
      for (std::size_t j = 0; j < n; ++j) {
        rates.push_back({Vec3::Zero(), rng.uniform(0, 20), 0.0});
        if (j + 1 < n) kls.push_back(rng.uniform(0.01, kTwoPi));
        for (std::size_t i = 0; i < j; ++i) om(i, j) = om(j, i) = rng.uniform(-60, 60);
      }
      const auto cfg = checked(t::chain_with_phases(rates, kls, om));
      const auto ddi = build_ddi_matrix(cfg);
      for (double d : grid) {
        const auto r = solve_chain(cfg, ddi, Detuning{d});
        worst = std::max(worst, std::abs(r.transmittance() + r.reflectance() - 1.0));
      }
    }
  }
  return {worst <= kTol, fmt::format("max | |t|^2+|r|^2-1 | = {:.2e} over N in {{1,2,3,5,10}}, "
                                     "{} sets each, 401 detunings; tolerance 1e-9",
                                     worst, kSetsPerSize)};
}

// 4 -------------------------------------------------------------------------
Outcome analytic_features() {
  constexpr double kTol = 1e-9;
  constexpr double kLocateTol = 1e-6;
  const double g = 11.03, kl = 0.3093 * kPi, om = 23.08;
  const auto cfg = checked(t::two_emitter_chain(g, 0.0, g, 0.0, kl, om));
  const auto ddi = build_ddi_matrix(cfg);
  const double peak = std::sqrt(2 * g * om * std::sin(kl) + om * om);
  const double zero = -g * std::tan(kl) - om / std::cos(kl);

  const auto R = [&](double d) { return reflectance(cfg, ddi, d); };
  double worst_value = 0.0, worst_position = 0.0;
  for (double p : {-peak, peak}) {
    worst_value = std::max(worst_value, std::abs(R(p) - 1.0));
    const double found = t::golden_section_min([&](double d) { return -R(d); }, p - 0.5, p + 0.5);
    worst_value = std::max(worst_value, std::abs(R(found) - 1.0));
    worst_position = std::max(worst_position, std::abs(found - p));
  }
  worst_value = std::max(worst_value, R(zero));
  const double found = t::golden_section_min(R, zero - 0.5, zero + 0.5);
  worst_value = std::max(worst_value, R(found));
  worst_position = std::max(worst_position, std::abs(found - zero));

  return {worst_value <= kTol && worst_position <= kLocateTol,
          fmt::format("peaks at +/-{:.6f}, zero at {:.6f}; max |R-target| {:.2e} (tol 1e-9), "
                      "re-scan offset {:.2e} (tol 1e-6)",
                      peak, zero, worst_value, worst_position)};
}

// 5 -------------------------------------------------------------------------
Outcome peak_asymmetry() {
  constexpr double kTol = 0.04;
  std::string detail;
  bool ok = true;
  for (const auto& [loss, target] : {std::pair{6.86, 0.31}, std::pair{3.43, 0.25}}) {
    auto raw = *io::preset_config("fig2-close");
    for (auto& e : raw.emitters) e.gamma_loss = loss;
    const auto cfg = checked(raw);
    const auto ddi = build_ddi_matrix(cfg);
    const auto f = find_features(sweep_spectrum(cfg, ddi, -80, 80, 16001));
    if (f.peaks.size() != 2) {
      ok = false;
      detail += fmt::format("G'={}: {} peaks; ", loss, f.peaks.size());
      continue;
    }
    const double diff = std::abs(f.peaks[1].value - f.peaks[0].value);
    if (std::abs(diff - target) > kTol) ok = false;
    detail += fmt::format("G'={}: heights {:.4f}/{:.4f}, difference {:.4f} (target {} +/- 0.04); ",
                          loss, f.peaks[0].value, f.peaks[1].value, diff, target);
  }
  return {ok, detail};
}

// 6 -------------------------------------------------------------------------
Outcome shift_only() {
  const auto stacked = checked(*io::preset_config("fig5-stacked"));
  const double om = build_ddi_matrix(stacked)(0, 1);
  const auto& e = stacked.emitters[0];
  const auto cfg = checked(t::two_emitter_chain(e.gamma_wg, e.gamma_loss, e.gamma_wg, e.gamma_loss,
                                                0.0, om));
  const auto ddi = build_ddi_matrix(cfg);
  const double lo = -150, hi = 150;
  const std::size_t n = 3001;
  const double step = (hi - lo) / static_cast<double>(n - 1);
  const auto f = find_features(sweep_spectrum(cfg, ddi, lo, hi, n));
  const bool ok = f.peaks.size() == 1 && std::abs(f.peaks[0].position - om) <= step;
  return {ok, fmt::format("kl = 0, Omega = {:.4f}: {} interior maxima, first at {:.4f} "
                          "(grid step {})",
                          om, f.peaks.size(), f.peaks.empty() ? NAN : f.peaks[0].position, step)};
}

// 7 -------------------------------------------------------------------------
Outcome bandwidth_broadening() {
  constexpr double kLow = 2.0, kHigh = 3.0, kThreshold = 0.5;
  double width[2];
  BandwidthStatus status[2];
  for (int ddi_on = 0; ddi_on < 2; ++ddi_on) {
    const auto cfg = checked(t::uniform_chain(5, 32.75, 11.03, 6.86, ddi_on == 1));
    const auto f = find_features(sweep_spectrum(cfg, build_ddi_matrix(cfg), -150, 150, 6001),
                                 kThreshold);
    width[ddi_on] = f.bandwidth;
    status[ddi_on] = f.bandwidth_status;
  }
  const double ratio = width[1] / width[0];
  const bool ok = status[0] == BandwidthStatus::Ok && status[1] == BandwidthStatus::Ok &&
                  ratio >= kLow && ratio <= kHigh;
  return {ok, fmt::format("width at R=0.5: {:.3f} with DDI ({}), {:.3f} without ({}); ratio {:.3f}, "
                          "required [2.0, 3.0]",
                          width[1], to_string(status[1]), width[0], to_string(status[0]), ratio)};
}

// 8 -------------------------------------------------------------------------
Outcome large_separation() {
  constexpr double kTol = 0.02;
  const auto deltas = uniform_grid(-150, 150, 601);

  auto pair = checked(*io::preset_config("fig4-half"));
  const auto on = build_ddi_matrix(pair);
  const auto off = DdiMatrix::zero(2);
  double pair_worst = 0.0;
  for (double d : deltas) {
    pair_worst = std::max(pair_worst, std::abs(reflectance(pair, on, d) - reflectance(pair, off, d)));
  }

  const auto chain = *io::preset_config("fig8-n5");
  std::vector<double> kls;
  for (int k = 20; k <= 40; ++k) kls.push_back(0.05 * k * kPi);
  const auto map_on = sweep_map(chain, deltas, kls, true);
  const auto map_off = sweep_map(chain, deltas, kls, false);
  double map_worst = 0.0, worst_kl = 0.0;
  for (std::size_t a = 0; a < kls.size(); ++a) {
    for (std::size_t b = 0; b < deltas.size(); ++b) {
      const double diff = std::abs(map_on.at(a, b) - map_off.at(a, b));
      if (diff > map_worst) {
        map_worst = diff;
        worst_kl = kls[a];
      }
    }
  }
  return {pair_worst <= kTol && map_worst <= kTol,
          fmt::format("two emitters at kl = pi: max |dR| {:.4f}; N = 5 rows kl in [pi, 2pi] "
                      "(step 0.05pi): max |dR| {:.4f} at kl = {:.2f}pi; tolerance 0.02",
                      pair_worst, map_worst, worst_kl / kPi)};
}

// 9 -------------------------------------------------------------------------
Outcome inverse_round_trip() {
  constexpr double kTol = 1e-10;
  double worst = 0.0;
  std::size_t count = 0;
  for (double g : {0.33, 1.06, 5.0, 11.03, 20.0}) {
    for (int k = 0; k <= 40; ++k) {
      const double kl = 0.05 * k * kPi;
      if (std::abs(std::cos(kl)) < 0.1) continue;
      for (double om = -60.0; om <= 60.0; om += 7.5) {
        const auto p = predict_two_emitter_features(g, kl, om);
        worst = std::max(worst, std::abs(estimate_ddi_from_fano(Detuning{*p.rmin}, g, kl) - om));
        ++count;
      }
    }
  }
  return {worst <= kTol,
          fmt::format("max |Omega_est - Omega| = {:.2e} over {} points; tolerance 1e-10", worst, count)};
}

// 10 ------------------------------------------------------------------------
Outcome asymmetric_condition() {
  constexpr double kTol = 1e-8;
  constexpr int kSets = 100;
  t::Rng rng(31337);
  int factor_two = 0, factor_one = 0, both = 0, neither = 0;
  double worst = 0.0;
  for (int s = 0; s < kSets;) {
    const double g1 = rng.uniform(0.5, 20), g2 = rng.uniform(0.5, 20);
    const double kl = rng.uniform(0, kTwoPi), om = rng.uniform(-60, 60);
    const double cross = std::sqrt(g1 * g2) * om * std::sin(kl);
    const double rhs2 = 2 * cross + om * om;
    const double rhs1 = cross + om * om;
    if (rhs2 < 0.25 || rhs2 > 140.0 * 140.0) continue;
    ++s;

    const auto cfg = checked(t::two_emitter_chain(g1, 0.0, g2, 0.0, kl, om));
    const auto ddi = build_ddi_matrix(cfg);
    const auto abs_t = [&](double d) { return std::abs(solve_chain(cfg, ddi, Detuning{d}).t); };
    std::vector<double> zeros;
    for (double x : t::grid_local_maxima([&](double d) { return -abs_t(d); }, -150, 150, 30001)) {
      const double z = t::golden_section_min(abs_t, x - 0.01, x + 0.01);
      if (abs_t(z) < 1e-6) zeros.push_back(z);
    }

    const auto matches = [&](double rhs) {
      if (rhs < 0 || zeros.size() != 2) return false;
      const double root = std::sqrt(rhs);
      return std::abs(zeros[0] + root) <= kTol && std::abs(zeros[1] - root) <= kTol;
    };
    const bool m2 = matches(rhs2), m1 = matches(rhs1);
    if (m2 && !m1) ++factor_two;
    else if (m1 && !m2) ++factor_one;
    else if (m1 && m2) ++both;
    else ++neither;
    if (zeros.size() == 2) {
      worst = std::max({worst, std::abs(zeros[0] + std::sqrt(rhs2)),
                        std::abs(zeros[1] - std::sqrt(rhs2))});
    }
  }
  return {factor_two == kSets,
          fmt::format("{} sets: factor-2 form {}, factor-1 form {}, both {}, neither {}; max "
                      "offset from factor-2 roots {:.2e} (tolerance 1e-8). Perfect reflection at "
                      "D^2 = 2 sqrt(G1 G2) W sin kl + W^2",
                      kSets, factor_two, factor_one, both, neither, worst)};
}

// 11 ------------------------------------------------------------------------
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "wgqed_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto sh = [](const std::string& args) {
    const std::string cmd = std::string("\"") + WGQED_CLI + "\" " + args + " >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string cfg = (dir / "c.json").string();
  int rc = sh("preset fig6-n5 -o " + cfg);
  rc |= sh("spectrum " + cfg + " --points 2001 -o " + (dir / "a.csv").string());
  rc |= sh("spectrum " + cfg + " --points 2001 -o " + (dir / "b.csv").string());
  const auto a = slurp(dir / "a.csv");
  const auto b = slurp(dir / "b.csv");
  fs::remove_all(dir);
  return {rc == 0 && !a.empty() && a == b,
          fmt::format("exit status {}, {} bytes, identical: {}", rc, a.size(), a == b)};
}

}  // namespace

int main() {
  const struct {
    int id;
    const char* name;
    Outcome (*run)();
  } criteria[] = {
      {1, "ddi-regression", ddi_regression},
      {2, "oracle-equivalence", oracle_equivalence},
      {3, "flux-conservation", flux_conservation},
      {4, "analytic-features", analytic_features},
      {5, "peak-asymmetry", peak_asymmetry},
      {6, "shift-only", shift_only},
      {7, "bandwidth-broadening", bandwidth_broadening},
      {8, "large-separation", large_separation},
      {9, "inverse-round-trip", inverse_round_trip},
      {10, "asymmetric-condition", asymmetric_condition},
      {11, "determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    fmt::print("{} {:>2} {}: {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", std::size(criteria) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
