// swd: command-line front end for the black-hole / watchdog simulator.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "swd/swd.hpp"

namespace fs = std::filesystem;

namespace {

std::optional<swd::ScenarioConfig> resolve_config(const std::string& config_path, const std::string& preset_name) {
  if (!preset_name.empty()) {
    auto c = swd::preset(preset_name);
    if (!c) {
      std::cerr << "unknown preset `" << preset_name << "`; known presets:";
      for (const auto& n : swd::preset_names()) std::cerr << ' ' << n;
      std::cerr << '\n';
    }
    return c;
  }
  auto parsed = swd::load_config(config_path);
  for (const auto& d : parsed.diagnostics) std::cerr << config_path << ": " << d.text() << '\n';
  if (!parsed.ok()) return std::nullopt;
  return parsed.config;
}

bool write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

int cmd_run(const std::string& config_path, const std::string& preset_name, const std::string& out_dir,
            std::optional<std::uint64_t> seed) {
  auto cfg = resolve_config(config_path, preset_name);
  if (!cfg) return 2;
  if (seed) cfg->seed = *seed;
  swd::RunResult result;
  try {
    result = swd::run_scenario(*cfg);
  } catch (const swd::Error& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return 1;
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create " << out_dir << ": " << ec.message() << '\n';
    return 1;
  }
  const fs::path dir(out_dir);
  std::string csv(swd::metrics_csv_header);
  csv += '\n' + swd::metrics_csv_row(result.metrics) + '\n';
  if (!write_file(dir / "trace.txt", result.trace.text()) || !write_file(dir / "metrics.csv", csv) ||
      !write_file(dir / "summary.txt", result.summary())) {
    std::cerr << "failed writing outputs to " << out_dir << '\n';
    return 1;
  }
  std::cout << result.summary();
  return 0;
}

std::vector<std::uint64_t> expand_seeds(const std::vector<std::string>& specs) {
  std::vector<std::uint64_t> out;
  for (const auto& s : specs) {
    if (auto dash = s.find('-'); dash != std::string::npos) {
      const auto lo = std::stoull(s.substr(0, dash));
      const auto hi = std::stoull(s.substr(dash + 1));
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(std::stoull(s));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packet-level MANET simulator: black-hole attack, watchdog and selective watchdog IDS"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out_dir = "out";
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run one scenario and write trace.txt, metrics.csv and summary.txt");
  auto* run_cfg = run->add_option("--config", config_path, "Scenario file")->check(CLI::ExistingFile);
  auto* run_preset = run->add_option("--preset", preset_name, "Built-in scenario instead of a file");
  run_cfg->excludes(run_preset);
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--seed", seed, "Override the scenario seed");

  std::vector<std::size_t> n_values{12, 24, 36}, l_values{3, 4, 6};
  std::vector<std::string> seed_specs{"1-10"}, scheme_names{"watchdog", "selective"};
  std::string sweep_out;
  double sweep_range = 200.0;
  unsigned jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Sweep node count, cluster size, seed and scheme; CSV to stdout or --out");
  sweep->add_option("--n", n_values, "Node counts")->delimiter(',')->capture_default_str();
  sweep->add_option("--l", l_values, "Cluster sizes")->delimiter(',')->capture_default_str();
  sweep->add_option("--seeds", seed_specs, "Seeds, e.g. 1-10 or 1,5,9")->delimiter(',')->capture_default_str();
  sweep->add_option("--schemes", scheme_names, "watchdog, selective, none")->delimiter(',')->capture_default_str();
  sweep->add_option("--range", sweep_range, "Radio range in meters")->capture_default_str();
  sweep->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  sweep->add_option("--out", sweep_out, "CSV output file");
  bool sweep_analytic = false;
  sweep->add_flag("--analytic", sweep_analytic, "Print the closed-form listening tables instead of simulating");

  bool explain = false;
  auto* analytic = app.add_subcommand("analytic", "Closed-form promiscuous-listening tables");
  analytic->add_flag("--explain", explain, "Show the algebra behind each column");

  std::string validate_path, validate_preset;
  auto* validate = app.add_subcommand("validate", "Check a scenario file and list diagnostics");
  auto* val_cfg = validate->add_option("--config", validate_path, "Scenario file");
  auto* val_preset = validate->add_option("--preset", validate_preset, "Built-in scenario");
  val_cfg->excludes(val_preset);

  std::string show_name;
  auto* presets = app.add_subcommand("preset", "Print a built-in scenario as a config file, or list presets");
  presets->add_option("name", show_name, "Preset name");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    if (config_path.empty() && preset_name.empty()) {
      std::cerr << "run: one of --config or --preset is required\n";
      return 2;
    }
    return cmd_run(config_path, preset_name, out_dir, seed);
  }

  if (*analytic || (*sweep && sweep_analytic)) {
    std::cout << swd::analytic_report(explain || sweep_analytic);
    return 0;
  }

  if (*sweep) {
    swd::SweepSpec spec;
    spec.n_values = n_values;
    spec.l_values = l_values;
    spec.range = sweep_range;
    spec.jobs = jobs;
    try {
      spec.seeds = expand_seeds(seed_specs);
    } catch (const std::exception&) {
      std::cerr << "sweep: malformed --seeds\n";
      return 2;
    }
    spec.schemes.clear();
    for (const auto& s : scheme_names) {
      auto m = swd::parse_ids_mode(s);
      if (!m) {
        std::cerr << "sweep: unknown scheme `" << s << "`\n";
        return 2;
      }
      spec.schemes.push_back(*m);
    }
    for (auto l : l_values) {
      if (l < 3) {
        std::cerr << "sweep: cluster size " << l << " is below 3 (a monitored segment spans three nodes)\n";
        return 2;
      }
    }
    const auto result = swd::run_sweep(spec);
    const auto csv = result.csv();
    if (sweep_out.empty()) {
      std::cout << csv;
    } else if (!write_file(sweep_out, csv)) {
      std::cerr << "cannot write " << sweep_out << '\n';
      return 1;
    }
    for (const auto& r : result.rows) {
      if (!r.error.empty()) return 1;
    }
    return 0;
  }

  if (*validate) {
    if (!validate_preset.empty()) {
      auto c = swd::preset(validate_preset);
      if (!c) {
        std::cerr << "unknown preset `" << validate_preset << "`\n";
        return 2;
      }
      const auto diags = swd::validate_config(*c);
      for (const auto& d : diags) std::cout << d.text() << '\n';
      if (diags.empty()) std::cout << "ok\n";
      return diags.empty() ? 0 : 1;
    }
    if (validate_path.empty()) {
      std::cerr << "validate: one of --config or --preset is required\n";
      return 2;
    }
    const auto parsed = swd::load_config(validate_path);
    for (const auto& d : parsed.diagnostics) std::cout << validate_path << ": " << d.text() << '\n';
    if (parsed.ok()) std::cout << "ok\n";
    return parsed.ok() ? 0 : 1;
  }

  if (*presets) {
    if (show_name.empty()) {
      for (const auto& n : swd::preset_names()) std::cout << n << '\n';
      return 0;
    }
    auto c = swd::preset(show_name);
    if (!c) {
      std::cerr << "unknown preset `" << show_name << "`\n";
      return 2;
    }
    std::cout << swd::config_text(*c);
    return 0;
  }
  return 0;
}
