#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "hyperqubit/measurement.hpp"
#include "hyperqubit/params.hpp"
#include "hyperqubit/source_metrics.hpp"

namespace hyperqubit {

/// Invalid configuration: bad JSON, unknown key, wrong type or out-of-range value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct NoiseConfig {
  double jitter_fwhm_ps = 30.0;
  double counts_per_basis = 1e6;
  std::uint64_t seed = 0;
  TraceMode mode = TraceMode::SampledCounts;
  double background_per_bin = 0.0;
};

enum class SourceKind { Pump, Rho };

struct SourceConfig {
  SourceKind kind = SourceKind::Pump;
  std::optional<Matrix4c> rho;
};

enum class FidelityTarget { PhiPlus, Pump, None };

struct TomoConfig {
  int n_seeds = 4;
  int n_bootstrap = 0;
  bool nuisance = false;
  FidelityTarget target = FidelityTarget::PhiPlus;
  /// Measured M_omega for the orthogonalization; the model c1 is used when absent.
  std::optional<double> m_omega;
  double frame_rotation_rad = 0.0;
};

struct MetricsConfig {
  int homscan_points = 91;
  MixingConvention mixing = MixingConvention::HalfRate;
};

struct RunConfig {
  PhysParams physics;
  PumpConfig pump;
  TimeGrid grid;
  NoiseConfig noise;
  SourceConfig source;
  TomoConfig tomo;
  MetricsConfig metrics;
  BrightnessInputs brightness{4.7, 82.0, 0.32, 0.78, 0.80};
  std::string output_dir = "out";

  void validate() const;
};

/// tau = 133 ps, FSS = 7.35 µeV, jitter 30 ps, 2 ps bins over 1200 ps.
RunConfig paper_defaults_profile();
/// Throws ConfigError for an unknown profile name.
RunConfig profile(const std::string& name);

/// Overlays a JSON object onto `base`. Unknown keys and bad values raise ConfigError naming the field.
RunConfig apply_config_json(RunConfig base, const nlohmann::json& j);
/// Parse errors carry line and column.
nlohmann::json read_config_file(const std::filesystem::path& path);

nlohmann::json config_to_json(const RunConfig& c);
/// Hex SHA-256 of the compact serialization of config_to_json.
std::string config_hash(const RunConfig& c);
std::string sha256_hex(const std::string& data);

}  // namespace hyperqubit
