#pragma once

// Config documents, parameter presets, run manifests and the CSV/JSON
// formats written by the command-line tool.
//
// Config schema (JSON):
//   {
//     "waveguide": {"lambda_guided_nm": 211.8, "lambda_transition_nm": 655,
//                   "propagation_axis": [1, 0, 0]},          // axis optional
//     "dipole": {"direction": [0, -1, 0]},                    // optional
//     "emitters": [{"position_nm": [0, 17, 0], "gamma_wg": 11.03,
//                   "gamma_loss": 6.86}, ...],
//     "ddi": {"enabled": true, "override": [[0, w], [w, 0]]}  // optional
//   }

#include "wgqed/analysis.hpp"
#include "wgqed/core.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace wgqed::io {

using nlohmann::json;

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Malformed or incomplete config/CSV input. `field` names the offending key
/// path (e.g. "waveguide.lambda_guided_nm") or a line reference.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path.empty() ? key : path + "." + key, "missing required field");
  return *it;
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

inline Vec3 vec3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(path, "expected an array of 3 numbers");
  Vec3 out;
  for (int k = 0; k < 3; ++k) out[k] = number(v[k], path + "[" + std::to_string(k) + "]");
  return out;
}

inline json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

/// Builds a (not yet validated) chain config from a parsed JSON document.
inline ChainConfig config_from_json(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");

  ChainConfig cfg;
  const json& wg = require(doc, "waveguide", "");
  cfg.waveguide.lambda_guided =
      number(require(wg, "lambda_guided_nm", "waveguide"), "waveguide.lambda_guided_nm");
  cfg.waveguide.lambda_transition =
      number(require(wg, "lambda_transition_nm", "waveguide"), "waveguide.lambda_transition_nm");
  if (wg.contains("propagation_axis")) {
    cfg.waveguide.propagation_axis = vec3(wg["propagation_axis"], "waveguide.propagation_axis");
  }

  if (doc.contains("dipole")) {
    cfg.dipole.direction = vec3(require(doc["dipole"], "direction", "dipole"), "dipole.direction");
  }

  const json& ems = require(doc, "emitters", "");
  if (!ems.is_array()) throw ConfigError("emitters", "expected an array");
  for (std::size_t i = 0; i < ems.size(); ++i) {
    const std::string path = "emitters[" + std::to_string(i) + "]";
    Emitter e;
    e.position = vec3(require(ems[i], "position_nm", path), path + ".position_nm");
    e.gamma_wg = number(require(ems[i], "gamma_wg", path), path + ".gamma_wg");
    e.gamma_loss = number(require(ems[i], "gamma_loss", path), path + ".gamma_loss");
    cfg.emitters.push_back(e);
  }

  if (doc.contains("ddi")) {
    const json& ddi = doc["ddi"];
    if (!ddi.is_object()) throw ConfigError("ddi", "expected an object");
    if (ddi.contains("enabled")) {
      if (!ddi["enabled"].is_boolean()) throw ConfigError("ddi.enabled", "expected a boolean");
      cfg.ddi_enabled = ddi["enabled"].get<bool>();
    }
    if (ddi.contains("override") && !ddi["override"].is_null()) {
      const json& m = ddi["override"];
      if (!m.is_array()) throw ConfigError("ddi.override", "expected an array of rows");
      const auto n = static_cast<Eigen::Index>(m.size());
      Eigen::MatrixXd omega(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::string row_path = "ddi.override[" + std::to_string(i) + "]";
        const json& row = m[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
          throw ConfigError(row_path, "expected " + std::to_string(n) + " numbers");
        }
        for (Eigen::Index j = 0; j < n; ++j) {
          omega(i, j) = number(row[static_cast<std::size_t>(j)],
                               row_path + "[" + std::to_string(j) + "]");
        }
      }
      cfg.ddi_override = std::move(omega);
    }
  }
  return cfg;
}

inline json config_to_json(const ChainConfig& cfg) {
  json doc;
  doc["waveguide"] = {{"lambda_guided_nm", cfg.waveguide.lambda_guided},
                      {"lambda_transition_nm", cfg.waveguide.lambda_transition},
                      {"propagation_axis", detail::vec3_json(cfg.waveguide.propagation_axis)}};
  doc["dipole"] = {{"direction", detail::vec3_json(cfg.dipole.direction)}};
  json ems = json::array();
  for (const auto& e : cfg.emitters) {
    ems.push_back({{"position_nm", detail::vec3_json(e.position)},
                   {"gamma_wg", e.gamma_wg},
                   {"gamma_loss", e.gamma_loss}});
  }
  doc["emitters"] = std::move(ems);
  json ddi = {{"enabled", cfg.ddi_enabled}};
  if (cfg.ddi_override) {
    json rows = json::array();
    const auto& m = *cfg.ddi_override;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    ddi["override"] = std::move(rows);
  }
  doc["ddi"] = std::move(ddi);
  return doc;
}

/// Parses JSON text; syntax errors are reported with line and column.
inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col),
                      "JSON syntax error");
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Reads and validates a config file.
inline ChainConfig load_config(const std::string& path) {
  return validate_chain(config_from_json(parse_json_text(read_text_file(path), path)));
}

/// Canonical one-line text of a resolved config; the digest input.
inline std::string canonical_config(const ChainConfig& cfg) { return config_to_json(cfg).dump(); }

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

inline std::string config_digest(const ChainConfig& cfg) {
  return sha256_hex(canonical_config(cfg));
}

struct RunManifest {
  std::string config_digest;
  std::string command;
  std::map<std::string, std::string> parameters;
  std::string tool_version{kToolVersion};
  std::vector<std::string> outputs;
};

inline json manifest_to_json(const RunManifest& m, const ChainConfig& cfg) {
  return {{"config_digest", m.config_digest},
          {"command", {{"name", m.command}, {"parameters", m.parameters}}},
          {"tool_version", m.tool_version},
          {"outputs", m.outputs},
          {"config", config_to_json(cfg)}};
}

// ---------------------------------------------------------------------------
// presets

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "fig2-close", "fig4-quarter", "fig4-half", "fig5-diag",   "fig5-stacked",
      "fig6-n5",    "fig8-n5",      "single-17nm", "single-37nm"};
  return names;
}

namespace detail {

inline ChainConfig nanowire_chain() {
  ChainConfig cfg;
  cfg.waveguide.lambda_guided = 211.8;
  cfg.waveguide.lambda_transition = 655.0;
  return cfg;
}

// Rates of a quantum dot 17 nm and 37 nm from the wire (Gamma0 units).
inline Emitter close_dot(double x, double y = 17.0) { return {Vec3(x, y, 0.0), 11.03, 6.86}; }
inline Emitter far_dot(double x, double y = 37.0) { return {Vec3(x, y, 0.0), 1.06, 1.26}; }

}  // namespace detail

/// Parameter sets of the reference quantum-dot/silver-nanowire system.
inline std::optional<ChainConfig> preset_config(std::string_view name) {
  using detail::close_dot;
  ChainConfig cfg = detail::nanowire_chain();
  if (name == "fig2-close") {
    cfg.emitters = {close_dot(0.0), close_dot(32.75)};
  } else if (name == "fig4-quarter") {
    cfg.emitters = {close_dot(0.0), close_dot(52.95)};
  } else if (name == "fig4-half") {
    cfg.emitters = {close_dot(0.0), close_dot(105.9)};
  } else if (name == "fig5-diag") {
    cfg.emitters = {close_dot(0.0), detail::far_dot(20.0)};
  } else if (name == "fig5-stacked") {
    cfg.emitters = {close_dot(0.0), {Vec3(0.0, 49.75, 0.0), 0.33, 1.12}};
  } else if (name == "fig6-n5" || name == "fig8-n5") {
    for (int j = 0; j < 5; ++j) cfg.emitters.push_back(close_dot(32.75 * j));
  } else if (name == "single-17nm") {
    cfg.emitters = {close_dot(0.0)};
  } else if (name == "single-37nm") {
    cfg.emitters = {detail::far_dot(0.0)};
  } else {
    return std::nullopt;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_value(double v) { return fmt::format("{:.12g}", v); }

/// Spectrum CSV: '#' header block (digest, command, resolved config), then
/// the columns delta,reflection,transmission,loss.
inline std::string spectrum_csv(const Spectrum& s, const RunManifest& manifest,
                                const ChainConfig& cfg) {
  std::string out;
  out += "# wgqed spectrum\n";
  out += fmt::format("# tool_version: {}\n", manifest.tool_version);
  out += fmt::format("# config_digest: {}\n", manifest.config_digest);
  out += fmt::format("# command: {}", manifest.command);
  for (const auto& [k, v] : manifest.parameters) out += fmt::format(" {}={}", k, v);
  out += "\n";
  out += fmt::format("# config: {}\n", canonical_config(cfg));
  out += "delta,reflection,transmission,loss\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += fmt::format("{},{},{},{}\n", format_value(s.deltas[i]), format_value(s.reflection[i]),
                       format_value(s.transmission[i]), format_value(s.loss[i]));
  }
  return out;
}

inline std::string map_csv(const ReflectionMap& m, const RunManifest& manifest,
                           const ChainConfig& cfg) {
  std::string out;
  out += "# wgqed map\n";
  out += fmt::format("# tool_version: {}\n", manifest.tool_version);
  out += fmt::format("# config_digest: {}\n", manifest.config_digest);
  out += fmt::format("# command: {}", manifest.command);
  for (const auto& [k, v] : manifest.parameters) out += fmt::format(" {}={}", k, v);
  out += "\n";
  out += fmt::format("# config: {}\n", canonical_config(cfg));
  out += "kl,delta,reflection\n";
  for (std::size_t a = 0; a < m.kl.size(); ++a) {
    for (std::size_t b = 0; b < m.deltas.size(); ++b) {
      out += fmt::format("{},{},{}\n", format_value(m.kl[a]), format_value(m.deltas[b]),
                         format_value(m.at(a, b)));
    }
  }
  return out;
}

/// Spectrum read back from CSV together with its header metadata.
struct SpectrumFile {
  Spectrum spectrum;
  std::map<std::string, std::string> header;  // "# key: value" lines
  std::optional<ChainConfig> config;          // from the "# config:" line
};

inline SpectrumFile parse_spectrum_csv(std::istream& in, const std::string& source) {
  SpectrumFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_columns = false;

  const auto fail = [&](const std::string& msg) -> ConfigError {
    return ConfigError(source + ":" + std::to_string(line_no), msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      auto key = line.substr(1, colon - 1);
      auto value = line.substr(colon + 1);
      const auto trim = [](std::string& s) {
        s.erase(0, s.find_first_not_of(' '));
        s.erase(s.find_last_not_of(' ') + 1);
      };
      trim(key);
      trim(value);
      file.header[key] = value;
      continue;
    }
    if (!have_columns) {
      if (line != "delta,reflection,transmission,loss") {
        throw fail("expected column header 'delta,reflection,transmission,loss'");
      }
      have_columns = true;
      continue;
    }
    std::array<double, 4> v{};
    std::istringstream row(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(row, cell, ',')) {
      if (col >= 4) throw fail("too many columns");
      try {
        std::size_t used = 0;
        v[col] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw fail("not a number: '" + cell + "'");
      }
      ++col;
    }
    if (col != 4) throw fail("expected 4 columns");
    auto& s = file.spectrum;
    if (!s.deltas.empty() && !(v[0] > s.deltas.back())) {
      throw fail("delta column must be strictly increasing");
    }
    s.deltas.push_back(v[0]);
    s.reflection.push_back(v[1]);
    s.transmission.push_back(v[2]);
    s.loss.push_back(v[3]);
  }
  if (!have_columns) throw ConfigError(source, "missing column header");

  if (auto it = file.header.find("config"); it != file.header.end()) {
    file.config = validate_chain(config_from_json(parse_json_text(it->second, source + " (config)")));
  }
  return file;
}

// ---------------------------------------------------------------------------
// feature report

inline json extrema_json(const std::vector<Extremum>& ex) {
  json arr = json::array();
  for (const auto& e : ex) arr.push_back({{"delta", e.position}, {"reflection", e.value}});
  return arr;
}

/// JSON feature report. For a two-emitter symmetric chain recorded in the
/// spectrum header, adds the DDI strength inferred from the deepest interior
/// reflection minimum.
inline json features_report(const SpectrumFile& file, double threshold) {
  const SpectralFeatures f = find_features(file.spectrum, threshold);
  json report;
  report["threshold"] = f.threshold;
  report["peaks"] = extrema_json(f.peaks);
  report["minima"] = extrema_json(f.minima);
  report["bandwidth"] = f.bandwidth;
  report["flag"] = to_string(f.bandwidth_status);
  if (f.bandwidth_status != BandwidthStatus::NoPeak) {
    report["band"] = {f.band_low, f.band_high};
  }
  if (auto it = file.header.find("config_digest"); it != file.header.end()) {
    report["config_digest"] = it->second;
  }

  if (file.config && file.config->size() == 2 && !f.minima.empty()) {
    const auto& cfg = *file.config;
    const auto& e1 = cfg.emitters[0];
    const auto& e2 = cfg.emitters[1];
    if (e1.gamma_wg == e2.gamma_wg && e1.gamma_loss == e2.gamma_loss) {
      const auto deepest = *std::min_element(
          f.minima.begin(), f.minima.end(),
          [](const Extremum& a, const Extremum& b) { return a.value < b.value; });
      const double kl = gap_phases(cfg).front().kl;
      try {
        const double omega = estimate_ddi_from_fano(Detuning{deepest.position}, e1.gamma_wg, kl);
        const bool lossless = e1.gamma_loss == 0.0;
        report["ddi_estimate"] = {
            {"omega", omega},
            {"fano_minimum", deepest.position},
            {"kl", kl},
            {"validity", lossless ? "exact" : "approximate"},
            {"caveat", lossless ? "lossless emitters: inversion is exact up to grid resolution"
                                : "gamma_loss > 0: inversion assumes losses small against gamma_wg"}};
      } catch (const Error&) {
        report["ddi_estimate"] = {{"omega", nullptr}, {"validity", "singular_phase"}};
      }
    }
  }
  return report;
}

}  // namespace wgqed::io
