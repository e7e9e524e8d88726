// wgqed: single-photon reflection/transmission of emitter chains coupled to a
// one-dimensional waveguide.
//
// Exit codes: 0 success, 2 config/usage error, 3 geometry error,
// 4 numerical error.

#include "wgqed/io.hpp"
#include "wgqed/wgqed.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <string>

namespace {

using namespace wgqed;
using io::json;

constexpr int kExitConfig = 2;
constexpr int kExitGeometry = 3;
constexpr int kExitNumerical = 4;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::CoincidentEmitters: return kExitGeometry;
    case ErrorCode::SingularSystem:
    case ErrorCode::SingularPhase: return kExitNumerical;
    default: return kExitConfig;
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io::ConfigError(path, "cannot open output file");
  out << text;
}

void write_manifest(const std::string& out_path, const io::RunManifest& manifest,
                    const ChainConfig& cfg) {
  if (out_path.empty() || out_path == "-") return;
  write_output(out_path + ".manifest.json", io::manifest_to_json(manifest, cfg).dump(2) + "\n");
}

struct DdiArgs {
  std::string config;
  std::string format = "text";
  std::string out;
};

int run_ddi(const DdiArgs& a) {
  const ChainConfig cfg = io::load_config(a.config);
  const DdiMatrix m = build_ddi_matrix(cfg);
  const std::size_t n = m.size();

  if (a.format == "json") {
    json rows = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < n; ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    const json doc = {{"units", "Gamma0"},
                      {"omega", rows},
                      {"ddi_enabled", cfg.ddi_enabled},
                      {"override", cfg.ddi_override.has_value()},
                      {"config_digest", io::config_digest(cfg)}};
    write_output(a.out, doc.dump(2) + "\n");
    return 0;
  }

  std::string text = fmt::format("# DDI matrix Omega_ij in units of Gamma0 ({} emitters)\n", n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) text += fmt::format("{:>12.4f}", m(i, j));
    text += "\n";
  }
  write_output(a.out, text);
  return 0;
}

struct SpectrumArgs {
  std::string config;
  double delta_min = -80.0;
  double delta_max = 80.0;
  std::size_t points = 2001;
  std::string out;
  bool no_ddi = false;
  bool closed_form = false;
  unsigned threads = 0;
};

Spectrum closed_form_sweep(const ChainConfig& cfg, const DdiMatrix& ddi,
                           const std::vector<double>& grid, unsigned threads) {
  const auto& em = cfg.emitters;
  if (cfg.size() == 1) {
    return sweep_with(
        grid, [&](Detuning d) { return single_emitter(d, em[0].gamma_wg, em[0].gamma_loss); },
        threads);
  }
  const double kl = gap_phases(cfg).front().kl;
  const double omega = ddi(0, 1);
  if (em[0].gamma_wg == em[1].gamma_wg && em[0].gamma_loss == em[1].gamma_loss) {
    return sweep_with(
        grid,
        [&](Detuning d) {
          return two_emitter_symmetric(d, em[0].gamma_wg, em[0].gamma_loss, kl, omega);
        },
        threads);
  }
  return sweep_with(
      grid,
      [&](Detuning d) {
        return two_emitter_asymmetric(d, em[0].gamma_wg, em[0].gamma_loss, em[1].gamma_wg,
                                      em[1].gamma_loss, kl, omega);
      },
      threads);
}

int run_spectrum(const SpectrumArgs& a) {
  ChainConfig cfg = io::load_config(a.config);
  if (a.no_ddi) {
    cfg.ddi_enabled = false;
    cfg.ddi_override.reset();
  }
  if (!(a.delta_min < a.delta_max)) {
    throw Error(ErrorCode::InvalidArgument, "--delta-min must be smaller than --delta-max");
  }
  if (a.points < 2) throw Error(ErrorCode::InvalidArgument, "--points must be at least 2");
  if (a.closed_form && cfg.size() > 2) {
    throw Error(ErrorCode::InvalidArgument, "--closed-form is available for at most 2 emitters");
  }

  const DdiMatrix ddi = build_ddi_matrix(cfg);
  const auto grid = uniform_grid(a.delta_min, a.delta_max, a.points);
  const Spectrum s =
      a.closed_form ? closed_form_sweep(cfg, ddi, grid, a.threads)
                    : sweep_with(
                          grid, [&](Detuning d) { return solve_chain(cfg, ddi, d); }, a.threads);

  io::RunManifest manifest;
  manifest.config_digest = io::config_digest(cfg);
  manifest.command = "spectrum";
  manifest.parameters = {{"delta_min", io::format_value(a.delta_min)},
                         {"delta_max", io::format_value(a.delta_max)},
                         {"n_points", std::to_string(a.points)},
                         {"solver", a.closed_form ? "closed_form" : "linear_system"}};
  if (!a.out.empty() && a.out != "-") manifest.outputs = {a.out};
  write_output(a.out, io::spectrum_csv(s, manifest, cfg));
  write_manifest(a.out, manifest, cfg);
  return 0;
}

struct FeaturesArgs {
  std::string csv;
  double threshold = 0.5;
  std::string out;
};

int run_features(const FeaturesArgs& a) {
  std::ifstream in(a.csv, std::ios::binary);
  if (!in) throw io::ConfigError(a.csv, "cannot open file");
  const auto file = io::parse_spectrum_csv(in, a.csv);
  write_output(a.out, io::features_report(file, a.threshold).dump(2) + "\n");
  return 0;
}

struct MapArgs {
  std::string config;
  double delta_min = -150.0;
  double delta_max = 150.0;
  std::size_t delta_points = 601;
  double kl_min_pi = 0.0;
  double kl_max_pi = 2.0;
  std::size_t kl_points = 41;
  std::string out;
  bool no_ddi = false;
  unsigned threads = 0;
};

int run_map(const MapArgs& a) {
  ChainConfig cfg = io::load_config(a.config);
  if (a.no_ddi) {
    cfg.ddi_enabled = false;
    cfg.ddi_override.reset();
  }
  if (a.delta_points == 0 || a.kl_points == 0) {
    throw Error(ErrorCode::InvalidArgument, "grid sizes must be positive");
  }
  if (a.delta_points > 1 && !(a.delta_min < a.delta_max)) {
    throw Error(ErrorCode::InvalidArgument, "--delta-min must be smaller than --delta-max");
  }
  if (a.kl_points > 1 && !(a.kl_min_pi < a.kl_max_pi)) {
    throw Error(ErrorCode::InvalidArgument, "--kl-min-pi must be smaller than --kl-max-pi");
  }
  const auto deltas = uniform_grid(a.delta_min, a.delta_max, a.delta_points);
  auto kls = uniform_grid(a.kl_min_pi, a.kl_max_pi, a.kl_points);
  for (auto& kl : kls) kl *= kPi;

  const ReflectionMap map = sweep_map(cfg, deltas, kls, cfg.ddi_enabled, a.threads);

  io::RunManifest manifest;
  manifest.config_digest = io::config_digest(cfg);
  manifest.command = "map";
  manifest.parameters = {{"delta_min", io::format_value(a.delta_min)},
                         {"delta_max", io::format_value(a.delta_max)},
                         {"delta_points", std::to_string(a.delta_points)},
                         {"kl_min_pi", io::format_value(a.kl_min_pi)},
                         {"kl_max_pi", io::format_value(a.kl_max_pi)},
                         {"kl_points", std::to_string(a.kl_points)}};
  if (!a.out.empty() && a.out != "-") manifest.outputs = {a.out};
  write_output(a.out, io::map_csv(map, manifest, cfg));
  write_manifest(a.out, manifest, cfg);
  return 0;
}

int run_preset(const std::string& name, const std::string& out) {
  const auto cfg = io::preset_config(name);
  if (!cfg) {
    std::string valid;
    for (const auto& n : io::preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    std::cerr << "error: unknown preset '" << name << "'; valid names: " << valid << "\n";
    return kExitConfig;
  }
  write_output(out, io::config_to_json(validate_chain(*cfg)).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-photon scattering in a waveguide coupled to an emitter chain"};
  app.set_version_flag("--version", std::string(io::kToolVersion));
  app.require_subcommand(1);

  DdiArgs ddi_args;
  auto* ddi_cmd = app.add_subcommand("ddi", "Print the dipole-dipole coupling matrix (Gamma0)");
  ddi_cmd->add_option("config", ddi_args.config, "Config file (JSON)")->required();
  ddi_cmd->add_option("--format", ddi_args.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}));
  ddi_cmd->add_option("-o,--out", ddi_args.out, "Output file (default stdout)");

  SpectrumArgs sp;
  auto* sp_cmd = app.add_subcommand("spectrum", "Sweep R, T and loss over a detuning grid");
  sp_cmd->add_option("config", sp.config, "Config file (JSON)")->required();
  sp_cmd->add_option("--delta-min", sp.delta_min, "Lowest detuning (Gamma0)");
  sp_cmd->add_option("--delta-max", sp.delta_max, "Highest detuning (Gamma0)");
  sp_cmd->add_option("--points", sp.points, "Number of grid points");
  sp_cmd->add_option("-o,--out", sp.out, "Output CSV (default stdout)");
  sp_cmd->add_flag("--no-ddi", sp.no_ddi, "Disable the dipole-dipole coupling");
  sp_cmd->add_flag("--closed-form", sp.closed_form, "Use analytic amplitudes (N <= 2)");
  sp_cmd->add_option("--threads", sp.threads, "Worker threads (0 = all cores)");

  FeaturesArgs fa;
  auto* fa_cmd = app.add_subcommand("features", "Peaks, minima and bandwidth of a spectrum CSV");
  fa_cmd->add_option("csv", fa.csv, "Spectrum CSV written by 'spectrum'")->required();
  fa_cmd->add_option("--threshold", fa.threshold, "Reflection level for the bandwidth");
  fa_cmd->add_option("-o,--out", fa.out, "Output JSON (default stdout)");

  MapArgs ma;
  auto* ma_cmd = app.add_subcommand("map", "Reflection over (kl, detuning) for a uniform chain");
  ma_cmd->add_option("config", ma.config, "Config file (JSON) with uniform gaps")->required();
  ma_cmd->add_option("--delta-min", ma.delta_min, "Lowest detuning (Gamma0)");
  ma_cmd->add_option("--delta-max", ma.delta_max, "Highest detuning (Gamma0)");
  ma_cmd->add_option("--delta-points", ma.delta_points, "Detuning grid size");
  ma_cmd->add_option("--kl-min-pi", ma.kl_min_pi, "Lowest gap phase, in units of pi");
  ma_cmd->add_option("--kl-max-pi", ma.kl_max_pi, "Highest gap phase, in units of pi");
  ma_cmd->add_option("--kl-points", ma.kl_points, "Gap phase grid size");
  ma_cmd->add_option("-o,--out", ma.out, "Output CSV (default stdout)");
  ma_cmd->add_flag("--no-ddi", ma.no_ddi, "Disable the dipole-dipole coupling");
  ma_cmd->add_option("--threads", ma.threads, "Worker threads (0 = all cores)");

  std::string preset_name;
  std::string preset_out;
  auto* pr_cmd = app.add_subcommand("preset", "Write a reference parameter set as a config");
  pr_cmd->add_option("name", preset_name, "Preset name")->required();
  pr_cmd->add_option("-o,--out", preset_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*ddi_cmd) return run_ddi(ddi_args);
    if (*sp_cmd) return run_spectrum(sp);
    if (*fa_cmd) return run_features(fa);
    if (*ma_cmd) return run_map(ma);
    if (*pr_cmd) return run_preset(preset_name, preset_out);
  } catch (const io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  }
  return kExitConfig;
}
