#include "ofmpc/runner.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace ofmpc {

namespace {

std::string fmt(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

void append_group(std::string& header, const char* label, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i)
    header += "," + std::string(label) + "_" + std::to_string(i);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

int count_group(const std::vector<std::string>& columns, const char* label) {
  const std::string prefix = std::string(label) + "_";
  int count = 0;
  for (const auto& c : columns)
    if (c.rfind(prefix, 0) == 0) ++count;
  return count;
}

}  // namespace

std::string log_to_csv(const ClosedLoopLog& log) {
  if (log.empty()) throw EmptyLogError("log_to_csv: empty log");
  const LogRecord& first = log.records.front();
  std::string out = "k,t";
  append_group(out, "r", first.r.size());
  append_group(out, "y", first.y.size());
  append_group(out, "e", first.innovation.size());
  append_group(out, "u", first.u.size());
  append_group(out, "xhat", first.x_filt.size());
  append_group(out, "theta", first.theta_filt.size());
  out += ",nmpc_iters,nmpc_kkt,refgen_res\n";

  for (const LogRecord& rec : log.records) {
    out += std::to_string(rec.k) + "," + fmt(rec.t);
    for (const Vec* group : {&rec.r, &rec.y, &rec.innovation, &rec.u,
                             &rec.x_filt, &rec.theta_filt})
      for (Eigen::Index i = 0; i < group->size(); ++i)
        out += "," + fmt((*group)(i));
    out += "," + std::to_string(rec.nmpc_iterations) + "," +
           fmt(rec.nmpc_kkt) + "," + fmt(rec.refgen_residual) + "\n";
  }
  return out;
}

ClosedLoopLog log_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("log_from_csv: missing header");
  const std::vector<std::string> columns = split(line, ',');
  const int n_r = count_group(columns, "r");
  const int n_y = count_group(columns, "y");
  const int n_e = count_group(columns, "e");
  const int n_u = count_group(columns, "u");
  const int n_x = count_group(columns, "xhat");
  const int n_t = count_group(columns, "theta");

  ClosedLoopLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (static_cast<int>(cells.size()) != 2 + n_r + n_y + n_e + n_u + n_x +
                                              n_t + 3)
      throw ConfigError("log_from_csv: bad row width");
    LogRecord rec;
    std::size_t idx = 0;
    rec.k = std::stoi(cells[idx++]);
    rec.t = std::stod(cells[idx++]);
    auto take = [&](int n) {
      Vec v(n);
      for (int i = 0; i < n; ++i) v(i) = std::stod(cells[idx++]);
      return v;
    };
    rec.r = take(n_r);
    rec.y = take(n_y);
    rec.innovation = take(n_e);
    rec.u = take(n_u);
    rec.x_filt = take(n_x);
    rec.theta_filt = take(n_t);
    rec.nmpc_iterations = std::stoi(cells[idx++]);
    rec.nmpc_kkt = std::stod(cells[idx++]);
    rec.refgen_residual = std::stod(cells[idx++]);
    log.records.push_back(std::move(rec));
  }
  return log;
}

std::string metrics_report(const Scenario& s, const Metrics& m) {
  std::string out;
  out += "scenario: " + s.name + "\n";
  out += "steps: " + std::to_string(s.steps) + "\n";
  out += "family: " + to_string(s.family) + "\n";
  out += "tail_fraction: " + fmt(s.metrics.tail_fraction) + "\n";
  out += "rms_error: " + fmt(m.rms_error) + "\n";
  out += "max_tail_error: " + fmt(m.max_tail_error) + "\n";
  out += "max_tail_innovation: " + fmt(m.max_tail_innovation) + "\n";
  out += "theorem1_gain: " + fmt(s.metrics.theorem1_gain) + "\n";
  out += std::string("theorem1_consistent: ") +
         (theorem1_consistent(m, s.metrics.theorem1_gain) ? "yes" : "no") +
         "\n";
  return out;
}

Metrics metrics_from_report(const std::string& text) {
  Metrics m;
  std::istringstream in(text);
  std::string line;
  bool found = false;
  while (std::getline(in, line)) {
    const std::size_t colon = line.find(": ");
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    const std::string value = line.substr(colon + 2);
    if (key == "rms_error") m.rms_error = std::stod(value), found = true;
    if (key == "max_tail_error") m.max_tail_error = std::stod(value);
    if (key == "max_tail_innovation") m.max_tail_innovation = std::stod(value);
  }
  if (!found) throw ConfigError("metrics_from_report: no metrics found");
  return m;
}

RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig config;
  CLI::App app{"offset-free nonlinear MPC simulator"};
  app.add_option("--scenario", config.scenario,
                 "named preset scenario to run");
  app.add_option("--config", config.config_path, "scenario config file");
  app.add_flag("--all", config.all, "run the whole preset battery");
  app.add_option("--out", config.output_dir, "output directory");
  unsigned int seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "override the seed");
  int steps = 0;
  auto* steps_opt = app.add_option("--steps", steps, "override the step count");

  std::vector<const char*> argv;
  argv.push_back("ofmpc_sim");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& err) {
    throw ConfigError(std::string("argument error: ") + err.what());
  }
  if (seed_opt->count()) config.seed = seed;
  if (steps_opt->count()) config.steps = steps;

  const int selectors = (config.scenario.empty() ? 0 : 1) +
                        (config.config_path.empty() ? 0 : 1) +
                        (config.all ? 1 : 0);
  if (selectors != 1)
    throw ConfigError(
        "exactly one of --scenario, --config, --all must be given");
  if (!config.scenario.empty()) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), config.scenario) == names.end())
      throw ConfigError("unknown preset '" + config.scenario +
                        "' (see --help for the list)");
  }
  return config;
}

namespace {

bool directory_writable(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir, ec)) return false;
  const fs::path probe = fs::path(dir) / ".write_probe";
  std::ofstream out(probe);
  if (!out) return false;
  out.close();
  fs::remove(probe, ec);
  return true;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace

int execute(const RunConfig& config) {
  std::vector<Scenario> scenarios;
  try {
    if (config.all) {
      for (const std::string& name : preset_names())
        scenarios.push_back(make_preset(name));
    } else if (!config.scenario.empty()) {
      scenarios.push_back(make_preset(config.scenario));
    } else {
      scenarios.push_back(load_scenario(config.config_path));
    }
  } catch (const std::runtime_error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  for (Scenario& s : scenarios) {
    if (config.seed) s.seed = *config.seed;
    if (config.steps) s.steps = *config.steps;
  }

  if (!directory_writable(config.output_dir)) {
    std::fprintf(stderr, "error: output directory '%s' is not writable\n",
                 config.output_dir.c_str());
    return 1;
  }
  namespace fs = std::filesystem;

  struct Row {
    std::string name;
    DisturbanceFamily family;
    Metrics metrics;
  };
  std::vector<Row> rows;
  for (const Scenario& s : scenarios) {
    try {
      const ClosedLoopLog log = run_scenario(s);
      const Metrics metrics = compute_metrics(log, s.metrics.tail_fraction);
      write_file((fs::path(config.output_dir) / (s.name + ".csv")).string(),
                 log_to_csv(log));
      write_file(
          (fs::path(config.output_dir) / (s.name + ".metrics.txt")).string(),
          metrics_report(s, metrics));
      rows.push_back({s.name, s.family, metrics});
      std::printf("%-18s rms=%-12.6g tail_err=%-12.6g tail_innov=%.6g\n",
                  s.name.c_str(), metrics.rms_error, metrics.max_tail_error,
                  metrics.max_tail_innovation);
    } catch (const std::runtime_error& err) {
      std::fprintf(stderr, "error: scenario '%s' failed: %s\n",
                   s.name.c_str(), err.what());
      return 1;
    }
  }

  if (config.all) {
    std::map<std::string, std::vector<const Row*>> groups;
    for (const Row& row : rows)
      groups[row.name.substr(0, row.name.rfind('-'))].push_back(&row);
    std::string table =
        "group              model rms_error          max_tail_error     "
        "max_tail_innovation\n";
    for (const auto& [group, members] : groups) {
      for (const Row* row : members) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-18s %-5s %-18.10g %-18.10g %.10g\n",
                      group.c_str(), to_string(row->family).c_str(),
                      row->metrics.rms_error, row->metrics.max_tail_error,
                      row->metrics.max_tail_innovation);
        table += line;
      }
    }
    try {
      write_file((fs::path(config.output_dir) / "comparison.txt").string(),
                 table);
    } catch (const std::runtime_error& err) {
      std::fprintf(stderr, "error: %s\n", err.what());
      return 1;
    }
  }
  return 0;
}

}  // namespace ofmpc
