#include "ofmpc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace ofmpc {

using nlohmann::json;

std::string to_string(PlantKind kind) {
  return kind == PlantKind::VanDerPol ? "vanderpol" : "cstr";
}

PlantKind plant_kind_from_string(const std::string& name) {
  if (name == "vanderpol") return PlantKind::VanDerPol;
  if (name == "cstr") return PlantKind::Cstr;
  throw ConfigError("unknown plant kind '" + name + "'");
}

DisturbanceModel make_disturbance(const Scenario& s) {
  switch (s.family) {
    case DisturbanceFamily::Cdm:
      return DisturbanceModel::cdm(1);
    case DisturbanceFamily::Pdm:
      return s.plant_kind == PlantKind::VanDerPol
                 ? DisturbanceModel::pdm_vanderpol()
                 : DisturbanceModel::pdm_cstr(s.cstr_model);
    case DisturbanceFamily::Fnn: {
      FnnArchitecture arch;
      arch.hx_layers = {3, 6, 6, 2};
      arch.hy_layers = {2, 4, 1};
      arch.in_offset = s.fnn_in_offset;
      arch.in_scale = s.fnn_in_scale;
      arch.hx_out_scale = s.fnn_hx_out_scale;
      arch.hy_out_scale = s.fnn_hy_out_scale;
      return DisturbanceModel::fnn(std::move(arch));
    }
  }
  throw ConfigError("unknown disturbance family");
}

// --- presets ----------------------------------------------------------------

namespace {

std::vector<Vec> generic_samples(int count, double sample_time, double offset,
                                 double amp1, double period1, double amp2,
                                 double period2) {
  std::vector<Vec> samples;
  samples.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double t = sample_time * k;
    Vec r(1);
    r(0) = offset + amp1 * std::sin(2.0 * M_PI * t / period1) +
           amp2 * std::sin(2.0 * M_PI * t / period2);
    samples.push_back(r);
  }
  return samples;
}

Scenario vdp_base() {
  Scenario s;
  s.plant_kind = PlantKind::VanDerPol;
  s.vdp_plant = {1.0, 1.0, 1.0};
  s.vdp_model = {0.8, 0.9, 0.8};
  s.sample_time = 0.5;
  s.substeps = 8;
  s.nmpc.horizon = 5;
  s.nmpc.w_x_diag = Vec::Constant(2, 10.0);
  s.nmpc.w_u_diag = Vec::Ones(1);
  return s;
}

Scenario cstr_base() {
  Scenario s;
  s.plant_kind = PlantKind::Cstr;
  s.cstr_plant = CstrParams{};
  s.cstr_model = CstrParams{};
  s.cstr_model.arrhenius_prefactor *= 0.9;
  s.cstr_model.feed_temperature += 2.0;
  s.cstr_model.heat_of_reaction_term *= 1.08;
  s.cstr_model.heat_transfer_term *= 0.9;
  s.sample_time = 0.5;
  s.substeps = 8;
  s.nmpc.horizon = 5;
  s.nmpc.w_x_diag = Vec(2);
  s.nmpc.w_x_diag << 1.0, 0.1;
  s.nmpc.w_u_diag = Vec::Ones(1);
  s.ekf.x0 = Vec(2);
  s.ekf.x0 << 373.131126, 2.0;
  // The network sees normalized deviations from the operating range.
  s.fnn_in_offset = Vec(3);
  s.fnn_in_offset << 373.0, 2.0, 305.0;
  s.fnn_in_scale = Vec(3);
  s.fnn_in_scale << 20.0, 1.0, 20.0;
  s.fnn_hx_out_scale = Vec(2);
  s.fnn_hx_out_scale << 10.0, 1.0;
  s.fnn_hy_out_scale = Vec::Ones(1);
  return s;
}

void apply_family(Scenario& s, const std::string& family) {
  s.family = family_from_string(family);
  if (s.family == DisturbanceFamily::Fnn &&
      s.plant_kind == PlantKind::VanDerPol) {
    s.fnn_in_offset = Vec::Zero(3);
    s.fnn_in_scale = Vec::Ones(3);
    s.fnn_hx_out_scale = Vec::Ones(2);
    s.fnn_hy_out_scale = Vec::Ones(1);
  }
}

void apply_generic_covariances(Scenario& s) {
  // Generic-reference runs train faster: tiny state noise, large parameter
  // noise. The constant model keeps the set-point covariances.
  if (s.family == DisturbanceFamily::Cdm) {
    s.ekf.q_x = 1.0;
    s.ekf.q_theta = 1.0;
  } else {
    s.ekf.q_x = 1e-10;
    s.ekf.q_theta = 50.0;
  }
  s.ekf.q_y = 0.25;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"vdp-pwc-cdm",      "vdp-pwc-pdm",      "vdp-pwc-fnn",
          "vdp-generic-cdm",  "vdp-generic-pdm",  "vdp-generic-fnn",
          "cstr-generic-cdm", "cstr-generic-pdm", "cstr-generic-fnn"};
}

Scenario make_preset(const std::string& name) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw ConfigError("unknown preset '" + name + "'");

  const bool cstr = name.rfind("cstr-", 0) == 0;
  const std::string family = name.substr(name.rfind('-') + 1);

  Scenario s = cstr ? cstr_base() : vdp_base();
  s.name = name;
  s.seed = 1;
  apply_family(s, family);

  if (name.find("-pwc-") != std::string::npos) {
    s.steps = 200;
    s.ekf.q_x = 1.0;
    s.ekf.q_y = 0.25;
    s.ekf.q_theta = 1.0;
    s.reference.kind = ReferenceKind::PiecewiseConstant;
    s.reference.segment_length = 50;
    for (double level : {0.5, 1.5, -1.0, 0.8}) {
      Vec r(1);
      r(0) = level;
      s.reference.samples.push_back(r);
    }
    s.refgen.derive_nominal_input = false;  // set-point targets are static
  } else {
    s.steps = 300;
    s.refgen.preview_extra = 10;  // deeper preview kills the truncation lag
    s.reference.kind = ReferenceKind::SampledTrajectory;
    const int count = s.steps + s.nmpc.horizon + s.refgen.preview_extra + 16;
    s.reference.samples =
        cstr ? generic_samples(count, s.sample_time, 2.0, 0.5, 13.0, 0.25,
                               6.0)
             : generic_samples(count, s.sample_time, 0.0, 0.7, 13.0, 0.35,
                               6.0);
    if (cstr) {
      s.ekf.q_x = 1.0;
      s.ekf.q_y = 0.25;
      s.ekf.q_theta = 1.0;
    } else {
      apply_generic_covariances(s);
    }
  }
  return s;
}

// --- json config ------------------------------------------------------------

namespace {

json to_json(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vec vec_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(data.data(), data.size());
}

json maybe_vec(const Vec& v) { return v.size() ? to_json(v) : json(); }

Vec maybe_vec_from(const json& j, const char* key) {
  return (j.contains(key) && !j.at(key).is_null()) ? vec_from_json(j.at(key))
                                                   : Vec();
}

json to_json(const CstrParams& p) {
  return {{"flow_over_volume", p.flow_over_volume},
          {"feed_concentration", p.feed_concentration},
          {"feed_temperature", p.feed_temperature},
          {"arrhenius_prefactor", p.arrhenius_prefactor},
          {"activation_energy_over_r", p.activation_energy_over_r},
          {"heat_of_reaction_term", p.heat_of_reaction_term},
          {"heat_transfer_term", p.heat_transfer_term}};
}

CstrParams cstr_from_json(const json& j) {
  CstrParams p;
  p.flow_over_volume = j.at("flow_over_volume");
  p.feed_concentration = j.at("feed_concentration");
  p.feed_temperature = j.at("feed_temperature");
  p.arrhenius_prefactor = j.at("arrhenius_prefactor");
  p.activation_energy_over_r = j.at("activation_energy_over_r");
  p.heat_of_reaction_term = j.at("heat_of_reaction_term");
  p.heat_transfer_term = j.at("heat_transfer_term");
  return p;
}

json to_json(const VanDerPolParams& p) {
  return {{"mu", p.mu}, {"beta", p.beta}, {"rho", p.rho}};
}

VanDerPolParams vdp_from_json(const json& j) {
  return {j.at("mu"), j.at("beta"), j.at("rho")};
}

}  // namespace

std::string to_json_string(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["steps"] = s.steps;
  j["seed"] = s.seed;
  j["sample_time"] = s.sample_time;
  j["substeps"] = s.substeps;
  j["plant"]["kind"] = to_string(s.plant_kind);
  if (s.plant_kind == PlantKind::VanDerPol) {
    j["plant"]["params"] = to_json(s.vdp_plant);
    j["model"]["params"] = to_json(s.vdp_model);
  } else {
    j["plant"]["params"] = to_json(s.cstr_plant);
    j["model"]["params"] = to_json(s.cstr_model);
  }
  j["plant"]["initial_state"] = maybe_vec(s.plant_initial_state);

  j["disturbance"]["family"] = to_string(s.family);
  if (s.family == DisturbanceFamily::Fnn) {
    j["disturbance"]["fnn"] = {{"in_offset", maybe_vec(s.fnn_in_offset)},
                               {"in_scale", maybe_vec(s.fnn_in_scale)},
                               {"hx_out_scale", maybe_vec(s.fnn_hx_out_scale)},
                               {"hy_out_scale", maybe_vec(s.fnn_hy_out_scale)}};
  }

  j["ekf"] = {{"q_x", s.ekf.q_x},         {"q_y", s.ekf.q_y},
              {"q_theta", s.ekf.q_theta}, {"p0_x", s.ekf.p0_x},
              {"p0_theta", s.ekf.p0_theta}, {"x0", maybe_vec(s.ekf.x0)}};

  j["nmpc"] = {{"horizon", s.nmpc.horizon},
               {"w_x_diag", to_json(s.nmpc.w_x_diag)},
               {"w_u_diag", to_json(s.nmpc.w_u_diag)},
               {"terminal", s.nmpc.terminal},
               {"sqp_tol", s.nmpc.sqp_tol},
               {"sqp_max_iter", s.nmpc.sqp_max_iter}};
  j["nmpc"]["input_bounds"] =
      s.nmpc.input_bounds ? json{{"lower", to_json(s.nmpc.input_bounds->lower)},
                                 {"upper", to_json(s.nmpc.input_bounds->upper)}}
                          : json();
  j["nmpc"]["output_bounds"] =
      s.nmpc.output_bounds
          ? json{{"lower", to_json(s.nmpc.output_bounds->lower)},
                 {"upper", to_json(s.nmpc.output_bounds->upper)}}
          : json();

  j["refgen"] = {{"preview_extra", s.refgen.preview_extra},
                 {"tol", s.refgen.tol},
                 {"max_iter", s.refgen.max_iter},
                 {"derive_nominal_input", s.refgen.derive_nominal_input}};

  j["metrics"] = {{"tail_fraction", s.metrics.tail_fraction},
                  {"theorem1_gain", s.metrics.theorem1_gain}};

  j["reference"]["kind"] = to_string(s.reference.kind);
  j["reference"]["segment_length"] = s.reference.segment_length;
  json samples = json::array();
  for (const Vec& r : s.reference.samples) samples.push_back(to_json(r));
  j["reference"]["samples"] = samples;
  json nominal = json::array();
  for (const Vec& u : s.reference.nominal_input) nominal.push_back(to_json(u));
  j["reference"]["nominal_input"] = nominal;

  return j.dump(2) + "\n";
}

Scenario scenario_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& err) {
    throw ConfigError(std::string("config parse error: ") + err.what());
  }
  try {
    Scenario s;
    s.name = j.at("name");
    s.steps = j.at("steps");
    s.seed = j.at("seed");
    s.sample_time = j.at("sample_time");
    s.substeps = j.at("substeps");
    s.plant_kind = plant_kind_from_string(j.at("plant").at("kind"));
    if (s.plant_kind == PlantKind::VanDerPol) {
      s.vdp_plant = vdp_from_json(j.at("plant").at("params"));
      s.vdp_model = vdp_from_json(j.at("model").at("params"));
    } else {
      s.cstr_plant = cstr_from_json(j.at("plant").at("params"));
      s.cstr_model = cstr_from_json(j.at("model").at("params"));
    }
    s.plant_initial_state = maybe_vec_from(j.at("plant"), "initial_state");

    s.family = family_from_string(j.at("disturbance").at("family"));
    if (s.family == DisturbanceFamily::Fnn) {
      const json& f = j.at("disturbance").at("fnn");
      s.fnn_in_offset = maybe_vec_from(f, "in_offset");
      s.fnn_in_scale = maybe_vec_from(f, "in_scale");
      s.fnn_hx_out_scale = maybe_vec_from(f, "hx_out_scale");
      s.fnn_hy_out_scale = maybe_vec_from(f, "hy_out_scale");
    }

    const json& e = j.at("ekf");
    s.ekf.q_x = e.at("q_x");
    s.ekf.q_y = e.at("q_y");
    s.ekf.q_theta = e.at("q_theta");
    s.ekf.p0_x = e.at("p0_x");
    s.ekf.p0_theta = e.at("p0_theta");
    s.ekf.x0 = maybe_vec_from(e, "x0");

    const json& n = j.at("nmpc");
    s.nmpc.horizon = n.at("horizon");
    s.nmpc.w_x_diag = vec_from_json(n.at("w_x_diag"));
    s.nmpc.w_u_diag = vec_from_json(n.at("w_u_diag"));
    s.nmpc.terminal = n.at("terminal");
    s.nmpc.sqp_tol = n.at("sqp_tol");
    s.nmpc.sqp_max_iter = n.at("sqp_max_iter");
    if (!n.at("input_bounds").is_null())
      s.nmpc.input_bounds =
          BoxBounds{vec_from_json(n.at("input_bounds").at("lower")),
                    vec_from_json(n.at("input_bounds").at("upper"))};
    if (!n.at("output_bounds").is_null())
      s.nmpc.output_bounds =
          BoxBounds{vec_from_json(n.at("output_bounds").at("lower")),
                    vec_from_json(n.at("output_bounds").at("upper"))};

    const json& rg = j.at("refgen");
    s.refgen.preview_extra = rg.at("preview_extra");
    s.refgen.tol = rg.at("tol");
    s.refgen.max_iter = rg.at("max_iter");
    s.refgen.derive_nominal_input = rg.at("derive_nominal_input");

    const json& m = j.at("metrics");
    s.metrics.tail_fraction = m.at("tail_fraction");
    s.metrics.theorem1_gain = m.at("theorem1_gain");

    const json& r = j.at("reference");
    s.reference.kind = reference_kind_from_string(r.at("kind"));
    s.reference.segment_length = r.at("segment_length");
    for (const json& sample : r.at("samples"))
      s.reference.samples.push_back(vec_from_json(sample));
    for (const json& u : r.at("nominal_input"))
      s.reference.nominal_input.push_back(vec_from_json(u));
    return s;
  } catch (const json::exception& err) {
    throw ConfigError(std::string("config field error: ") + err.what());
  }
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file '" + path + "'");
  out << to_json_string(scenario);
  if (!out) throw ConfigError("failed writing config file '" + path + "'");
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return scenario_from_json_string(buffer.str());
}

}  // namespace ofmpc
