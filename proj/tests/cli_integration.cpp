// End-to-end checks of the CLI contract: exit codes (0 converged,
// 1 not converged, 2 invalid input), fail-fast validation, file formats
// that round-trip, and the simulate -> infer -> diagnose pipeline.

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "limebayes/ingest.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_work;
int g_failures = 0;

void check(bool ok, const std::string& what) {
  std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", what.c_str());
  if (!ok) ++g_failures;
}

int run(const std::string& args) {
  const std::string cmd =
      g_cli + " " + args + " > " + (g_work / "stdout.txt").string() + " 2> " +
      (g_work / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  if (status < 0) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_integration <path-to-limebayes-cli>\n";
    return 1;
  }
  g_cli = argv[1];
  g_work = fs::temp_directory_path() / "limebayes_cli_integration";
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  const fs::path sim = g_work / "sim";
  {
    const int rc = run("simulate --problem I --seed 9 --n 20 --out " + sim.string());
    check(rc == 0, "simulate exits 0");
    check(fs::exists(sim / "data.csv") && fs::exists(sim / "truth.json") &&
              fs::exists(sim / "conditions.json"),
          "simulate writes data.csv, truth.json, conditions.json");
    const auto data = limebayes::load_timeseries(
        sim / "data.csv", limebayes::ValueFormat::temperature_celsius,
        limebayes::TimeUnit::hours);
    check(data.size() == 20, "simulated dataset has the requested 20 rows");
    check(data.front().time_hr == 0.0 &&
              std::abs(data.back().time_hr - 4.0 * 0.98) < 1e-12,
          "default schedule spans [0, 4 lambda]");
    const auto truth = nlohmann::json::parse(slurp(sim / "truth.json"));
    check(truth.contains("lambda") && truth.contains("seed"),
          "truth sidecar records the generating parameters and seed");
  }

  const fs::path run_a = g_work / "run_a";
  const fs::path run_b = g_work / "run_b";
  {
    const std::string common = "infer --problem I --data " + (sim / "data.csv").string() +
                               " --conditions " + (sim / "conditions.json").string() +
                               " --seed 11 --steps 20000 --out ";
    const int rc_a = run(common + run_a.string());
    const int rc_b = run(common + run_b.string());
    check(rc_a == 0 && rc_b == 0, "infer on simulated data exits 0 (converged)");

    const std::vector<std::string> bundle{
        "samples.csv",   "diagnostics.json", "summary.json",
        "kde_lambda.csv", "kde_sigma.csv",   "overlay_lambda.csv",
        "trajectories.csv", "residuals.csv", "data.csv"};
    bool complete = true;
    for (const std::string& name : bundle) complete = complete && fs::exists(run_a / name);
    check(complete, "report bundle is complete for problem I");

    bool identical = true;
    for (const auto& entry : fs::directory_iterator(run_a)) {
      const auto name = entry.path().filename();
      identical = identical && slurp(entry.path()) == slurp(run_b / name);
    }
    check(identical, "same seed + same data -> byte-identical bundles");

    const auto diag = nlohmann::json::parse(slurp(run_a / "diagnostics.json"));
    check(diag["converged"].get<bool>() && diag["max_rhat"].get<double>() < 1.05,
          "diagnostics.json reports convergence");
  }

  {
    // exit-code contract: too few steps to converge -> exit 1, bundle still written
    const fs::path stuck = g_work / "stuck";
    const int rc = run("infer --problem I --synthesize --seed 5 --steps 10 --burn-in 0 --out " +
                       stuck.string());
    check(rc == 1, "unconverged run exits 1");
    check(fs::exists(stuck / "diagnostics.json"),
          "diagnostics still written when not converged");
  }

  {
    // fail fast: bad prior literal -> exit 2 and no output directory
    const fs::path never = g_work / "never";
    const int rc = run("infer --problem I --synthesize --prior-lambda 'bogus(1)' --out " +
                       never.string());
    check(rc == 2, "invalid prior literal exits 2");
    check(!fs::exists(never), "no output directory on validation failure");

    const int rc2 = run("infer --problem I --out " + never.string());
    check(rc2 == 2 && !fs::exists(never), "missing data source fails before output");

    const int rc3 = run("infer --problem IIx --synthesize --out " + never.string());
    check(rc3 == 2 && !fs::exists(never), "unknown problem name fails before output");
  }

  {
    // simulate -> infer for the single-measurement problem, file-driven
    const fs::path sim2 = g_work / "sim_iia";
    const int rc_sim = run("simulate --problem IIa --t-prime 1.0 --seed 17 --out " +
                           sim2.string());
    const fs::path run_iia = g_work / "run_sim_iia";
    const int rc_inf = run("infer --problem IIa --data " + (sim2 / "data.csv").string() +
                           " --conditions " + (sim2 / "conditions.json").string() +
                           " --seed 18 --steps 20000 --out " + run_iia.string());
    check(rc_sim == 0 && rc_inf == 0, "simulate IIa feeds infer IIa through files");
    const auto summary = nlohmann::json::parse(slurp(run_iia / "summary.json"));
    const double lo = summary["parameters"]["theta0"]["ci_lo"].get<double>();
    const double hi = summary["parameters"]["theta0"]["ci_hi"].get<double>();
    check(lo < 5.0 && 5.0 < hi, "IIa interval covers the generating theta0");
  }

  {
    // IIa via explicit flags, then IIb on the same datum through files
    const fs::path iia = g_work / "iia";
    const int rc = run(
        "infer --problem IIa --t-prime 1.0 --theta-prime-obs 14.5 --theta-air-obs 20 "
        "--seed 13 --steps 20000 --out " + iia.string());
    check(rc == 0, "IIa from explicit flags exits 0");

    const fs::path iib = g_work / "iib";
    const int rc2 = run(
        "infer --problem IIb --t-prime 1.0 --theta-prime-obs 14.5 --theta-air-obs 20 "
        "--seed 13 --steps 20000 --out " + iib.string());
    check(rc2 == 0, "IIb from explicit flags exits 0");
    check(fs::exists(iib / "joint_t0_theta0.csv") &&
              fs::exists(iib / "classical_curve.csv"),
          "IIb bundle adds the joint density and classical curve");

    const auto iia_summary = nlohmann::json::parse(slurp(iia / "summary.json"));
    const auto iib_summary = nlohmann::json::parse(slurp(iib / "summary.json"));
    const double iia_width =
        iia_summary["parameters"]["theta0"]["ci_hi"].get<double>() -
        iia_summary["parameters"]["theta0"]["ci_lo"].get<double>();
    const double iib_width =
        iib_summary["parameters"]["theta0"]["ci_hi"].get<double>() -
        iib_summary["parameters"]["theta0"]["ci_lo"].get<double>();
    check(iib_width > iia_width, "IIb theta0 interval wider than IIa on the same datum");
  }

  {
    // config file path: nested sections + CLI override precedence
    const fs::path cfg = g_work / "run.ini";
    std::ofstream out(cfg);
    out << "[sampler]\nsteps=20000\nchains=4\n\n[priors]\nlambda=\"truncnormal(1.0,0.3,0,inf)\"\n";
    out.close();
    const fs::path from_cfg = g_work / "from_cfg";
    const int rc = run("infer --problem I --synthesize --seed 21 --config " +
                       cfg.string() + " --out " + from_cfg.string());
    check(rc == 0, "config file with [sampler]/[priors] sections drives a run");
    const auto samples = slurp(from_cfg / "samples.csv");
    // 4 chains x 10000 kept rows + header
    std::size_t lines = 0;
    for (char ch : samples) lines += ch == '\n';
    check(lines == 40001, "config-file step count is honored");
  }

  {
    // convert: temperature -> resistance -> temperature round trip
    const fs::path temp_csv = g_work / "temps.csv";
    {
      std::ofstream out(temp_csv);
      out << "time,temp_c\n0,5\n600,8.5\n1200,11.25\n";
    }
    const fs::path ohm_csv = g_work / "ohms.csv";
    const int rc = run("convert --direction to-resistance --time-unit seconds --in " +
                       temp_csv.string() + " --out " + ohm_csv.string());
    check(rc == 0, "convert to-resistance exits 0");

    const fs::path back_csv = g_work / "back.csv";
    const int rc2 = run("convert --direction to-temperature --time-unit hours --in " +
                        ohm_csv.string() + " --out " + back_csv.string());
    check(rc2 == 0, "convert to-temperature exits 0");
    const auto back = limebayes::load_timeseries(
        back_csv, limebayes::ValueFormat::temperature_celsius, limebayes::TimeUnit::hours);
    check(back.size() == 3 && std::abs(back[1].temp_c - 8.5) < 1e-9,
          "temperature -> resistance -> temperature round-trips");

    const int rc3 = run("convert --direction sideways --in " + temp_csv.string() +
                        " --out " + back_csv.string());
    check(rc3 == 2, "bad convert direction exits 2");
  }

  {
    // diagnose consumes the samples CSV emitted by infer
    const fs::path diag = g_work / "diag";
    const int rc = run("diagnose --samples " + (run_a / "samples.csv").string() +
                       " --out " + diag.string());
    check(rc == 0, "diagnose on a converged samples.csv exits 0");
    check(fs::exists(diag / "diagnostics.json") && fs::exists(diag / "trace.csv"),
          "diagnose writes diagnostics.json and trace.csv");
  }

  {
    // svg emission is opt-in
    const fs::path svg_run = g_work / "svg_run";
    const int rc = run("infer --problem I --synthesize --seed 31 --steps 4000 --svg --out " +
                       svg_run.string());
    check(rc == 0 || rc == 1, "svg run completes");
    check(fs::exists(svg_run / "trajectories.svg") &&
              fs::exists(svg_run / "kde_lambda.svg"),
          "svg renders written when requested");
  }

  if (g_failures == 0) fs::remove_all(g_work);
  std::printf("%d failure(s)\n", g_failures);
  return g_failures;
}
