// Command-line driver: one-off solves, MSE sweeps, DLR bars, large-antenna
// checks and federated training runs. Powers and noise are given in dB.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "otafl/experiments.hpp"
#include "otafl/mimo_solver.hpp"

namespace {

using namespace otafl;

// "10", "2,4,8" or "2:20" (inclusive).
std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos) {
        out.push_back(std::stoi(item));
      } else {
        const int lo = std::stoi(item.substr(0, colon));
        const int hi = std::stoi(item.substr(colon + 1));
        require(lo <= hi, "empty range '" + item + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ContractViolation*>(&e)) throw;
      throw ContractViolation("cannot parse integer list '" + text + "'");
    }
  }
  require(!out.empty(), "empty integer list");
  return out;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  require(!out.empty(), "empty list '" + text + "'");
  return out;
}

std::vector<DlrBounds> parse_bounds(const std::string& rmin, const std::string& rmax) {
  const auto lo = split(rmin);
  const auto hi = split(rmax);
  require(lo.size() == hi.size(), "--rmin and --rmax need the same number of entries");
  std::vector<DlrBounds> out;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    DlrBounds b{std::stod(lo[i]), std::stod(hi[i])};
    b.validate();
    out.push_back(b);
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ContractViolation("cannot write '" + path + "'");
  return out;
}

std::string summary_path(const std::string& path) {
  const auto dot = path.rfind('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + ".summary.csv";
  return path.substr(0, dot) + ".summary" + path.substr(dot);
}

struct Common {
  std::string scenario = "MISO";
  std::string k = "10";
  std::string nd = "1";
  std::string nt = "1";
  std::string rmin = "0.83333333333333337";
  std::string rmax = "1.25";
  double sigma2_db = 0.0;
  double power_db = 0.0;
  int draws = 100;
  std::uint64_t seed = 1;
  std::string method = "fixed,dlr";
  std::string out;
  int threads = 1;
};

void add_common(CLI::App* app, Common& c, const std::string& default_out) {
  c.out = default_out;
  app->add_option("--scenario", c.scenario, "SISO, MISO, SIMO or MIMO")->capture_default_str();
  app->add_option("--k", c.k, "device counts: 10, 2,4,8 or 2:20")->capture_default_str();
  app->add_option("--nd", c.nd, "transmit antennas per device (list)")->capture_default_str();
  app->add_option("--nt", c.nt, "receive antennas (list)")->capture_default_str();
  app->add_option("--rmin", c.rmin, "lower DLR bound(s)")->capture_default_str();
  app->add_option("--rmax", c.rmax, "upper DLR bound(s)")->capture_default_str();
  app->add_option("--sigma2-db", c.sigma2_db, "noise power [dB]")->capture_default_str();
  app->add_option("--power-db", c.power_db, "per-device power budget [dB]")->capture_default_str();
  app->add_option("--draws", c.draws, "channel draws per point")->capture_default_str();
  app->add_option("--seed", c.seed, "base seed")->capture_default_str();
  app->add_option("--method", c.method, "fixed|ndlr, dlr, sdr, dc, asymptotic (list)")
      ->capture_default_str();
  app->add_option("--out", c.out, "output CSV")->capture_default_str();
  app->add_option("--threads", c.threads, "worker threads")->capture_default_str();
}

std::vector<Method> methods_of(const Common& c) {
  std::vector<Method> out;
  for (const auto& m : split(c.method)) out.push_back(parse_method(m));
  return out;
}

int run_solve(const Common& c) {
  const auto ks = parse_int_list(c.k);
  const auto nds = parse_int_list(c.nd);
  const auto nts = parse_int_list(c.nt);
  const auto bounds = parse_bounds(c.rmin, c.rmax);
  require(ks.size() == 1 && nds.size() == 1 && nts.size() == 1 && bounds.size() == 1,
          "solve takes a single K, N_d, N_t and bound pair");
  const Scenario scenario =
      Scenario::make(parse_scenario_tag(c.scenario), nds.front(), nts.front());
  const std::uint64_t seed = draw_seed(c.seed, 0);
  const ChannelSet channels = draw_channels(scenario, ks.front(), seed);
  const SystemModel system =
      make_system(scenario, ks.front(), db_to_linear(c.power_db), db_to_linear(c.sigma2_db));
  for (Method method : methods_of(c)) {
    const PointResult r = solve_point(channels, system, bounds.front(), method, seed);
    std::printf("method: %s\n", to_string(method).c_str());
    std::printf("  mse: %.10g\n", r.mse_over_sigma2 * system.sigma2);
    std::printf("  mse_over_sigma2: %.10g\n", r.mse_over_sigma2);
    std::printf("  mse_lb_over_sigma2: %.10g\n", r.mse_lb_over_sigma2);
    std::printf("  ratios:");
    for (double v : r.ratios) std::printf(" %.6f", v);
    std::printf("\n  equivalent_gain:");
    for (double v : r.equivalent_gain) std::printf(" %.6g", v);
    std::printf("\n");
    if (r.m) {
      std::printf("  m:");
      for (Eigen::Index i = 0; i < r.m->size(); ++i)
        std::printf(" (%.6f,%.6f)", (*r.m)(i).real(), (*r.m)(i).imag());
      std::printf("\n");
    }
  }
  return 0;
}

int run_sweep_cmd(const Common& c, bool timing) {
  SweepConfig cfg;
  cfg.scenario = parse_scenario_tag(c.scenario);
  cfg.k_values = parse_int_list(c.k);
  cfg.nd_values = parse_int_list(c.nd);
  cfg.nt_values = parse_int_list(c.nt);
  cfg.bounds = parse_bounds(c.rmin, c.rmax);
  cfg.sigma2 = db_to_linear(c.sigma2_db);
  cfg.power = db_to_linear(c.power_db);
  cfg.draws = c.draws;
  cfg.seed = c.seed;
  cfg.methods = methods_of(c);
  cfg.threads = c.threads;
  cfg.timing = timing;
  const auto rows = run_sweep(cfg);
  auto out = open_output(c.out);
  write_sweep_csv(out, rows);
  auto summary = open_output(summary_path(c.out));
  write_summary_csv(summary, summarize(rows));
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  std::fprintf(stderr, "%zu rows (%zu flagged) -> %s\n", rows.size(), failed, c.out.c_str());
  return 0;
}

int run_bars_cmd(const Common& c) {
  BarsConfig cfg;
  cfg.scenario = parse_scenario_tag(c.scenario);
  const auto ks = parse_int_list(c.k);
  const auto nds = parse_int_list(c.nd);
  const auto nts = parse_int_list(c.nt);
  const auto bounds = parse_bounds(c.rmin, c.rmax);
  require(ks.size() == 1 && nds.size() == 1 && nts.size() == 1 && bounds.size() == 1,
          "bars takes a single K, N_d, N_t and bound pair");
  cfg.k = ks.front();
  cfg.n_d = nds.front();
  cfg.n_t = nts.front();
  cfg.bounds = bounds.front();
  cfg.power = db_to_linear(c.power_db);
  cfg.sigma2 = db_to_linear(c.sigma2_db);
  cfg.seed = c.seed;
  auto out = open_output(c.out);
  write_bars_csv(out, run_bars(cfg));
  return 0;
}

int run_asymptotic_cmd(const Common& c, const std::string& antennas, int fixed_antennas) {
  AsymptoticConfig cfg;
  cfg.scenario = parse_scenario_tag(c.scenario);
  cfg.antennas = parse_int_list(antennas);
  cfg.fixed_antennas = fixed_antennas;
  cfg.k_values = parse_int_list(c.k);
  const auto bounds = parse_bounds(c.rmin, c.rmax);
  require(bounds.size() == 1, "asymptotic takes a single bound pair");
  cfg.bounds = bounds.front();
  cfg.power = db_to_linear(c.power_db);
  cfg.sigma2 = db_to_linear(c.sigma2_db);
  cfg.draws = c.draws;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  auto out = open_output(c.out);
  write_asymptotic_csv(out, run_asymptotic(cfg));
  return 0;
}

struct TrainFlags {
  std::string task = "synthetic";
  std::string mnist_dir;
  double fraction = 0.1;
  int epochs = 20;
  double mu = 0.01;
  std::string arch = "logistic";
  int hidden = 64;
  int max_retx = kDefaultMaxRetx;
  std::string beamformer = "optimized";
};

int run_train_cmd(const Common& c, const TrainFlags& t) {
  TrainRunConfig cfg;
  cfg.task = t.task;
  cfg.mnist_dir = t.mnist_dir;
  cfg.mnist_fraction = t.fraction;
  cfg.scenario = parse_scenario_tag(c.scenario);
  const auto ks = parse_int_list(c.k);
  const auto nds = parse_int_list(c.nd);
  const auto nts = parse_int_list(c.nt);
  const auto bounds = parse_bounds(c.rmin, c.rmax);
  require(ks.size() == 1 && nds.size() == 1 && nts.size() == 1 && bounds.size() == 1,
          "train takes a single K, N_d, N_t and bound pair");
  cfg.k = ks.front();
  cfg.n_d = nds.front();
  cfg.n_t = nts.front();
  cfg.power = db_to_linear(c.power_db);
  cfg.sigma2 = db_to_linear(c.sigma2_db);
  cfg.train.mu = t.mu;
  cfg.train.epochs = t.epochs;
  cfg.train.bounds = bounds.front();
  cfg.train.seed = c.seed;
  cfg.train.arch = parse_architecture(t.arch);
  cfg.train.hidden = t.hidden;
  cfg.train.max_retx = t.max_retx;
  if (t.beamformer == "optimized") cfg.train.beamformer = BeamformerPolicy::Optimized;
  else if (t.beamformer == "closed-form") cfg.train.beamformer = BeamformerPolicy::ClosedForm;
  else throw ContractViolation("unknown beamformer '" + t.beamformer + "'");
  cfg.policies.clear();
  for (const auto& m : split(c.method)) cfg.policies.push_back(parse_lr_policy(m));
  auto out = open_output(c.out);
  write_train_csv(out, run_train(cfg));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DLR design and simulation for AirComp federated learning"};
  app.set_config("--config", "", "TOML or INI file with option defaults");
  app.require_subcommand(1);

  Common solve_c, sweep_c, bars_c, asym_c, train_c;
  bool timing = false;
  std::string antennas = "64,128,256,512";
  int fixed_antennas = 1;
  TrainFlags train_f;

  auto* solve = app.add_subcommand("solve", "solve one channel draw and print the design");
  add_common(solve, solve_c, "");
  auto* sweep = app.add_subcommand("sweep-mse", "MSE over a grid of K, antennas and bounds");
  add_common(sweep, sweep_c, "sweep.csv");
  sweep->add_flag("--timing", timing, "record solver wall time in the seconds column");
  auto* bars = app.add_subcommand("bars", "per-device equivalent gain and DLR of one draw");
  bars_c.nd = "8";
  add_common(bars, bars_c, "bars.csv");
  auto* asym = app.add_subcommand("asymptotic", "MSE against the large-antenna limit");
  asym_c.scenario = "SIMO";
  asym_c.k = "4,8";
  asym_c.draws = 20;
  add_common(asym, asym_c, "asymptotic.csv");
  asym->add_option("--antennas", antennas, "values of the growing antenna count")->capture_default_str();
  asym->add_option("--fixed-antennas", fixed_antennas, "the other side's antenna count (MIMO)")
      ->capture_default_str();
  auto* train = app.add_subcommand("train", "federated training over the AirComp uplink");
  train_c.nd = "4";
  add_common(train, train_c, "train.csv");
  train->add_option("--task", train_f.task, "synthetic or mnist")->capture_default_str();
  train->add_option("--mnist-dir", train_f.mnist_dir, "directory holding the IDX files");
  train->add_option("--fraction", train_f.fraction, "MNIST subsample fraction")->capture_default_str();
  train->add_option("--epochs", train_f.epochs, "aggregation rounds")->capture_default_str();
  train->add_option("--mu", train_f.mu, "global learning rate")->capture_default_str();
  train->add_option("--arch", train_f.arch, "logistic or mlp")->capture_default_str();
  train->add_option("--hidden", train_f.hidden, "MLP hidden width")->capture_default_str();
  train->add_option("--max-retx", train_f.max_retx, "retransmission cap")->capture_default_str();
  train->add_option("--beamformer", train_f.beamformer, "optimized or closed-form")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*solve) return run_solve(solve_c);
    if (*sweep) return run_sweep_cmd(sweep_c, timing);
    if (*bars) return run_bars_cmd(bars_c);
    if (*asym) return run_asymptotic_cmd(asym_c, antennas, fixed_antennas);
    if (*train) return run_train_cmd(train_c, train_f);
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
