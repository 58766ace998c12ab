#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ofmpc/disturbance.hpp"
#include "ofmpc/dynamics.hpp"
#include "ofmpc/nmpc.hpp"
#include "ofmpc/refgen.hpp"

namespace ofmpc {

enum class PlantKind { VanDerPol, Cstr };

std::string to_string(PlantKind kind);
PlantKind plant_kind_from_string(const std::string& name);

struct EkfSettings {
  double q_x = 1.0;
  double q_y = 0.25;
  double q_theta = 1.0;
  double p0_x = 1.0;
  double p0_theta = 1.0;
  // Empty: the measured component is set to y(0) and the rest to zero.
  Vec x0;
};

struct NmpcSettings {
  int horizon = 5;
  Vec w_x_diag;
  Vec w_u_diag;
  std::string terminal = "equality";  // or "none"
  double sqp_tol = 1e-8;
  int sqp_max_iter = 50;
  std::optional<BoxBounds> input_bounds;
  std::optional<BoxBounds> output_bounds;
};

struct RefGenSettings {
  int preview_extra = 5;  // M = horizon + preview_extra
  double tol = 1e-9;
  int max_iter = 50;
  // Solve the reference problem on the true plant first and anchor the
  // model-side cost to that input trajectory.
  bool derive_nominal_input = true;
};

struct MetricsSettings {
  double tail_fraction = 0.2;
  double theorem1_gain = 50.0;
};

/// Everything needed to reproduce one closed-loop run; serializable to a
/// JSON config file and back without loss.
struct Scenario {
  std::string name;
  PlantKind plant_kind = PlantKind::VanDerPol;
  int steps = 300;
  unsigned int seed = 1;
  double sample_time = 0.5;
  int substeps = 8;

  VanDerPolParams vdp_plant;
  VanDerPolParams vdp_model;
  CstrParams cstr_plant;
  CstrParams cstr_model;
  // Empty: plant starts at its steady state for r(0).
  Vec plant_initial_state;

  DisturbanceFamily family = DisturbanceFamily::Cdm;
  // FNN only; layer sizes are fixed by the plant arity, normalization and
  // output scaling are configurable.
  Vec fnn_in_offset;
  Vec fnn_in_scale;
  Vec fnn_hx_out_scale;
  Vec fnn_hy_out_scale;

  EkfSettings ekf;
  NmpcSettings nmpc;
  RefGenSettings refgen;
  MetricsSettings metrics;
  ReferenceSignal reference;
};

/// Fixed named setups covering both plants, all three disturbance families,
/// and both reference types. Names: {vdp-pwc, vdp-generic} x {cdm, pdm, fnn}
/// plus cstr-generic-{cdm, pdm, fnn}.
std::vector<std::string> preset_names();
Scenario make_preset(const std::string& name);

std::string to_json_string(const Scenario& scenario);
Scenario scenario_from_json_string(const std::string& text);
void save_scenario(const Scenario& scenario, const std::string& path);
Scenario load_scenario(const std::string& path);

/// Disturbance model implied by the scenario (family, plant arity, FNN
/// normalization).
DisturbanceModel make_disturbance(const Scenario& scenario);

}  // namespace ofmpc
