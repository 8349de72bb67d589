// Copyright 2026 The fairshare Authors.
// SPDX-License-Identifier: Apache-2.0

// fairshare: demos, simulation sweeps, incentive tables and audit checks.

#include <fairshare/incentives.hpp>
#include <fairshare/ledger.hpp>
#include <fairshare/netsim.hpp>
#include <fairshare/scenario.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace fairshare;

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfig = 3,
  kIo = 4,
  kUnexpectedSuccess = 5,
  kProtocolBase = 10,
};

int exit_code(Errc e) {
  if (e == Errc::ok) return kOk;
  if (e == Errc::config_invalid) return kConfig;
  return kProtocolBase + static_cast<int>(e);
}

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw IoError("cannot write " + path.string());
  }
}

fs::path out_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec || !fs::is_directory(path)) throw IoError("cannot create directory " + path);
  return path;
}

scenario::Scenario load(const std::string& path, std::optional<std::uint64_t> seed) {
  scenario::Scenario s = path.empty() ? scenario::Scenario{} : scenario::parse_text(read_file(path));
  if (seed) s.seed = *seed;
  return s;
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size()) {
      throw scenario::ScenarioError("bad value '" + item + "' in --values");
    }
    values.push_back(v);
  }
  if (values.empty()) throw scenario::ScenarioError("--values is empty");
  return values;
}

int cmd_demo(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out) {
  const scenario::Scenario s = load(path, seed);
  const scenario::DemoOutcome r = scenario::run_demo(s);
  std::cout << r.transcript;
  if (!out.empty()) {
    const fs::path dir = out_dir(out);
    write_file(dir / "transcript.txt", r.transcript);
    write_file(dir / "ledger.log", r.ledger_log);
    write_file(dir / "ledger_snapshot.json", r.ledger_snapshot);
  }
  if (!r.failed_action) return kOk;
  std::cerr << "error: " << r.code << " at action " << *r.failed_action << "\n";
  return r.unexpected_success ? kUnexpectedSuccess : exit_code(r.code);
}

int cmd_simulate(const std::string& path, std::optional<std::uint64_t> seed, bool baseline,
                 const std::string& out) {
  netsim::SimConfig cfg = scenario::sim_config(load(path, seed));
  if (baseline) cfg.ledger_check_enabled = false;
  auto r = netsim::run(cfg);
  if (!r) {
    std::cerr << "error: " << r.error() << "\n";
    return exit_code(r.error());
  }
  const fs::path dir = out_dir(out);
  write_file(dir / "events.jsonl", r->event_log_text());
  write_file(dir / "metrics.json", r->metrics.to_json().dump(2) + "\n");
  write_file(dir / "ledger.log", r->ledger_log);
  write_file(dir / "ledger_snapshot.json", r->ledger_snapshot);
  const netsim::RunMetrics& m = r->metrics;
  std::cout << "requests " << m.requests.size() << ", succeeded " << m.successes() << "\n"
            << "mean download " << m.mean_download_ms() << " ms, mean upload " << m.mean_upload_ms()
            << " ms\n"
            << "chunk bytes " << m.chunk_bytes << ", control bytes " << m.control_bytes << ", events "
            << m.events << "\n";
  return kOk;
}

int cmd_sweep(const std::string& path, std::optional<std::uint64_t> seed, bool baseline,
              const std::string& axis_name, const std::string& values_csv, std::uint32_t repeats,
              const std::string& profile, const std::string& out) {
  const auto axis = netsim::axis_from_string(axis_name);
  if (!axis) throw scenario::ScenarioError("unknown axis '" + axis_name + "'");
  const auto behavior = actors::behavior_from_string(profile);
  if (!behavior) throw scenario::ScenarioError("unknown fault profile '" + profile + "'");
  netsim::SimConfig base = scenario::sim_config(load(path, seed));
  if (baseline) base.ledger_check_enabled = false;
  auto rows = netsim::sweep(*axis, parse_values(values_csv), base, repeats, *behavior);
  if (!rows) {
    std::cerr << "error: " << rows.error() << "\n";
    return exit_code(rows.error());
  }
  write_file(out, netsim::sweep_csv(*axis, *rows));
  const auto means = netsim::mean_latency_by_value(*rows);
  bool nondecreasing = true;
  double lo = means.front().second;
  double hi = lo;
  for (std::size_t i = 0; i < means.size(); ++i) {
    std::cout << netsim::to_string(*axis) << "=" << netsim::format_number(means[i].first)
              << "  mean download " << std::fixed << std::setprecision(3) << means[i].second << " ms\n"
              << std::defaultfloat;
    if (i > 0 && means[i].second < means[i - 1].second) nondecreasing = false;
    lo = std::min(lo, means[i].second);
    hi = std::max(hi, means[i].second);
  }
  std::cout << "trend: " << (nondecreasing ? "nondecreasing" : "not monotone") << ", spread "
            << std::fixed << std::setprecision(2) << (lo > 0 ? 100.0 * (hi - lo) / lo : 0.0) << "%\n";
  return kOk;
}

int cmd_payoff(std::uint32_t n, std::uint32_t k, const std::string& f_csv) {
  std::cout << "n,k,f,p_o,clamped,E_adv,E_adv_at_1_over_n\n";
  for (double f : parse_values(f_csv)) {
    auto sol = incentives::failure_penalizing_payoff(n, k, f);
    if (!sol) {
      std::cerr << "error: " << sol.error() << "\n";
      return exit_code(sol.error());
    }
    const double adv = incentives::expected_advantage({n, k, f, sol->payoff}).value();
    const double ideal = incentives::expected_advantage({n, k, f, 1.0 / n}).value();
    std::cout << n << "," << k << "," << netsim::format_number(f) << "," << netsim::format_number(sol->payoff)
              << "," << (sol->clamped ? "yes" : "no") << "," << netsim::format_number(adv) << ","
              << netsim::format_number(ideal) << "\n";
    if (sol->clamped) std::cerr << "warning: payoff clamped to 0 at f=" << f << "\n";
  }
  return kOk;
}

int cmd_audit(const std::string& path) {
  const ledger::LogReport r = ledger::verify_log(read_file(path));
  if (r.ok()) {
    std::cout << "ok: chain intact, signatures valid, replay matches at height " << r.height << "\n";
    return kOk;
  }
  std::cout << r.code << " at height " << r.height;
  if (!r.detail.empty()) std::cout << ": " << r.detail;
  std::cout << "\n";
  return exit_code(r.code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairshare: fair content marketplace demos, simulation and audit"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool baseline = false;

  auto* demo = app.add_subcommand("demo", "run a scenario's action script on an in-process network");
  demo->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  demo->add_option("--seed", seed, "override the scenario seed");
  demo->add_option("--out", out, "directory for transcript, ledger log and snapshot");

  auto* simulate = app.add_subcommand("simulate", "run the discrete-event simulator once");
  simulate->add_option("--scenario", scenario_path, "scenario JSON file (sim section)");
  simulate->add_option("--seed", seed, "override the scenario seed");
  simulate->add_flag("--baseline", baseline, "disable ledger payment checks");
  simulate->add_option("--out", out, "directory for event log, metrics and ledger files")->required();

  std::string axis;
  std::string values;
  std::uint32_t repeats = 5;
  std::string profile = "Crash";
  auto* sweep = app.add_subcommand("sweep", "sweep one simulator axis and write a CSV table");
  sweep->add_option("--axis", axis, "file_size, k, n, facilitators, n_clients, latency or faults")->required();
  sweep->add_option("--values", values, "comma-separated axis values")->required();
  sweep->add_option("--repeats", repeats, "seeded repeats per value")->check(CLI::PositiveNumber);
  sweep->add_option("--scenario", scenario_path, "base scenario (sim section)");
  sweep->add_option("--seed", seed, "base seed; repeat r uses seed + r");
  sweep->add_option("--fault-profile", profile, "behavior used by the faults axis");
  sweep->add_flag("--baseline", baseline, "disable ledger payment checks");
  sweep->add_option("--out", out, "CSV output path")->required();

  std::uint32_t n = 6;
  std::uint32_t k = 4;
  std::string f_grid = "0,0.05,0.1,0.2,0.3,0.4,0.5,0.6";
  auto* payoff = app.add_subcommand("payoff", "print payoff and expected advantage over a failure-rate grid");
  payoff->add_option("--n", n, "facilitators per file");
  payoff->add_option("--k", k, "chunks needed to decode");
  payoff->add_option("--f", f_grid, "comma-separated failure rates");

  std::string log_path;
  auto* audit = app.add_subcommand("audit", "verify a ledger log");
  audit->add_option("log", log_path, "ledger log file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*demo) return cmd_demo(scenario_path, seed, out);
    if (*simulate) return cmd_simulate(scenario_path, seed, baseline, out);
    if (*sweep) return cmd_sweep(scenario_path, seed, baseline, axis, values, repeats, profile, out);
    if (*payoff) return cmd_payoff(n, k, f_grid);
    if (*audit) return cmd_audit(log_path);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
