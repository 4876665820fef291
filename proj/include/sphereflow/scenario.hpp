#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sphereflow/flow.hpp"
#include "sphereflow/holder.hpp"
#include "sphereflow/width.hpp"

namespace sphereflow {

inline constexpr const char* kVersion = "1.0.0";

enum class Experiment { Spectrum, Flow, Ancient, Rigidity, Schauder, Width };

const char* to_string(Experiment e);

struct AmbientSpec {
  AmbientKind kind = AmbientKind::RoundSphere;
  int n = 3;
  ConformalSpec conformal;
};

/// Initial section for flow experiments.
struct InitialSpec {
  enum class Kind { Zero, Constant, Eigen, Random };
  Kind kind = Kind::Constant;
  double amplitude = 0.1;
  int component = 0;
};

struct SpectrumSpec {
  int count = 4;
  SpectrumOptions options;
};

struct RigiditySpec {
  std::vector<double> latitudes{0.0, 0.2, 0.4, 0.8};
  int perturbations = 10;
  double amplitude = 0.1;
  double flow_horizon = 0.2;  // Gronwall check along a short perturbed flow (0 disables)
};

struct SchauderSpec {
  SchauderCase family = SchauderCase::DecayingMode;
  std::vector<double> horizons{1.0, 2.0, 4.0, 8.0};
  SchauderOptions options;
};

/// A validated scenario. Parsing rejects unknown keys and out-of-range values
/// with ErrorCode::Config, naming the field (and the line for syntax errors).
struct Scenario {
  Experiment experiment = Experiment::Spectrum;
  std::uint64_t seed = 1;
  AmbientSpec ambient;
  int mesh_level = 3;
  double base_latitude = 0.0;
  FlowConfig flow;
  InitialSpec initial;
  LadderConfig ladder;
  SpectrumSpec spectrum;
  RigiditySpec rigidity;
  SchauderSpec schauder;
  WidthOptions width;
  std::string output;  // default output directory; the CLI flag takes precedence

  /// Canonical JSON of the full configuration, defaults filled in.
  std::string canonical_json() const;
};

Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);

struct RunResult {
  std::vector<std::string> files;  // names relative to the output directory
  std::string summary_json;
};

/// Runs the experiment and writes <experiment>-<seed>.* plus
/// <experiment>-<seed>.manifest.json into `out_dir` (created if missing).
RunResult run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir);

}  // namespace sphereflow
