#pragma once

// Experiment drivers behind the command-line tool: parameter sweeps over the
// solvers, per-device DLR bars, large-antenna checks and training runs. Every
// driver returns rows in a deterministic order and has a matching CSV writer.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "otafl/aircomp.hpp"
#include "otafl/channel.hpp"
#include "otafl/dlr_miso.hpp"
#include "otafl/flsim.hpp"

namespace otafl {

enum class Method {
  Fixed,       // r_k = 1 (NDLR)
  Dlr,         // optimized ratios; DC rank-one engine for multi-antenna receivers
  Sdr,         // optimized ratios; relaxation plus randomization only
  Dc,          // alias of Dlr with the engine spelled out
  Asymptotic,  // closed-form receive beamformer, then optimized ratios
};

std::string to_string(Method method);
Method parse_method(const std::string& text);

double db_to_linear(double db);

// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

struct PointResult {
  double mse_over_sigma2 = 0.0;
  double mse_lb_over_sigma2 = 0.0;
  double tau = 0.0;
  std::vector<double> ratios;
  std::vector<double> equivalent_gain;  // P_k ||h'_k||^2
  std::optional<CVectorXd> m;
};

/// One solve on one channel draw.
PointResult solve_point(const ChannelSet& channels, const SystemModel& system,
                        const DlrBounds& bounds, Method method, std::uint64_t seed);

struct SweepConfig {
  ScenarioTag scenario = ScenarioTag::MISO;
  std::vector<int> k_values{10};
  std::vector<int> nd_values{1};
  std::vector<int> nt_values{1};
  std::vector<DlrBounds> bounds{DlrBounds{}};
  double sigma2 = 1.0;  // linear
  double power = 1.0;   // linear
  int draws = 100;
  std::uint64_t seed = 1;
  std::vector<Method> methods{Method::Fixed, Method::Dlr};
  int threads = 1;
  bool timing = false;  // fill the seconds column

  void validate() const;
};

struct SweepRow {
  std::string scenario;
  int k = 0;
  int n_d = 1;
  int n_t = 1;
  double r_min = 1.0;
  double r_max = 1.0;
  std::string method;
  int draw = 0;
  double mse_over_sigma2 = 0.0;
  double mse_lb_over_sigma2 = 0.0;
  double tau = 0.0;
  double seconds = 0.0;
  std::string status = "ok";  // or the failure class
};

/// Channel draw `d` at a point uses seed mix(seed, d) for every method, bound
/// pair and K, so comparisons are paired and growing K only appends devices.
std::uint64_t draw_seed(std::uint64_t seed, int draw);

std::vector<SweepRow> run_sweep(const SweepConfig& config);

// scenario,K,N_d,N_t,r_min,r_max,method,draw,mse_over_sigma2,
// mse_lb_over_sigma2,tau,seconds,status
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

struct SweepSummary {
  std::string scenario;
  int k = 0;
  int n_d = 1;
  int n_t = 1;
  double r_min = 1.0;
  double r_max = 1.0;
  std::string method;
  int draws = 0;  // successful draws
  double mean_mse_over_sigma2 = 0.0;
  double std_mse_over_sigma2 = 0.0;
  double mean_mse_lb_over_sigma2 = 0.0;
};

/// Mean and sample standard deviation per point, in first-appearance order.
std::vector<SweepSummary> summarize(std::span<const SweepRow> rows);

// scenario,K,N_d,N_t,r_min,r_max,method,draws,mean_mse_over_sigma2,
// std_mse_over_sigma2,mean_mse_lb_over_sigma2
void write_summary_csv(std::ostream& out, std::span<const SweepSummary> rows);

struct BarsConfig {
  ScenarioTag scenario = ScenarioTag::MISO;
  int k = 10;
  int n_d = 8;
  int n_t = 1;
  DlrBounds bounds;
  double power = 1.0;
  double sigma2 = 1.0;
  std::uint64_t seed = 1;
};

struct BarRow {
  int device = 0;
  double channel_gain = 0.0;  // P_k ||h'_k||^2
  double dlr_value = 1.0;
};

/// DLR ratios of one draw, sorted by ascending equivalent channel gain.
std::vector<BarRow> run_bars(const BarsConfig& config);
void write_bars_csv(std::ostream& out, std::span<const BarRow> rows);

struct AsymptoticConfig {
  ScenarioTag scenario = ScenarioTag::SIMO;
  std::vector<int> antennas{64, 128, 256, 512};  // the growing side
  int fixed_antennas = 1;                        // the other side (MIMO only)
  std::vector<int> k_values{4, 8};
  DlrBounds bounds;
  double power = 1.0;
  double sigma2 = 1.0;
  int draws = 20;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct AsymptoticRow {
  std::string scenario;
  std::string regime;
  int k = 0;
  int n_d = 1;
  int n_t = 1;
  int draw = 0;
  double mse_over_sigma2 = 0.0;
  double theory_over_sigma2 = 0.0;
  double mean_abs_r_minus_1 = 0.0;
};

/// MISO solves the DLR problem directly; SIMO and MIMO use the closed-form
/// beamformer followed by the DLR solver.
std::vector<AsymptoticRow> run_asymptotic(const AsymptoticConfig& config);

// scenario,regime,K,N_d,N_t,draw,mse_over_sigma2,theory_over_sigma2,
// mean_abs_r_minus_1
void write_asymptotic_csv(std::ostream& out, std::span<const AsymptoticRow> rows);

struct TrainRunConfig {
  std::string task = "synthetic";  // or "mnist"
  std::filesystem::path mnist_dir;
  double mnist_fraction = 0.1;
  ScenarioTag scenario = ScenarioTag::SISO;
  int n_d = 1;
  int n_t = 1;
  int k = 10;
  double power = 1.0;
  double sigma2 = 1.0;
  double a = 10.0;
  TrainConfig train;  // system is filled in from the fields above
  std::vector<LrPolicy> policies{LrPolicy::Fixed, LrPolicy::Dlr};
};

struct TrainRow {
  std::string method;
  RoundLog log;
};

/// Both policies share the seed, so channels and noise draws are paired.
std::vector<TrainRow> run_train(const TrainRunConfig& config);

// method,round,loss,acc,e_sq,retx
void write_train_csv(std::ostream& out, std::span<const TrainRow> rows);

/// Loads train-images-idx3-ubyte / train-labels-idx1-ubyte and the t10k pair.
Task load_mnist_task(const std::filesystem::path& dir, double fraction, std::uint64_t seed);

}  // namespace otafl
