#include "otafl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "otafl/asymptotic.hpp"
#include "otafl/errors.hpp"
#include "otafl/mimo_solver.hpp"

namespace otafl {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Scenario scenario_for(ScenarioTag tag, int n_d, int n_t) {
  switch (tag) {
    case ScenarioTag::SISO: return Scenario::siso();
    case ScenarioTag::MISO: return Scenario::miso(n_d);
    case ScenarioTag::SIMO: return Scenario::simo(n_t);
    case ScenarioTag::MIMO: return Scenario::mimo(n_d, n_t);
  }
  return Scenario::siso();
}

std::vector<double> miso_gains(const MisoInstance& inst) {
  std::vector<double> g;
  for (std::size_t k = 0; k < inst.h.size(); ++k) g.push_back(inst.power[k] * inst.h[k].squaredNorm());
  return g;
}

double mean_abs_deviation(std::span<const double> r) {
  double s = 0.0;
  for (double v : r) s += std::abs(v - 1.0);
  return s / static_cast<double>(r.size());
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::Fixed: return "fixed";
    case Method::Dlr: return "dlr";
    case Method::Sdr: return "sdr";
    case Method::Dc: return "dc";
    case Method::Asymptotic: return "asymptotic";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  if (text == "fixed" || text == "ndlr") return Method::Fixed;
  if (text == "dlr") return Method::Dlr;
  if (text == "sdr") return Method::Sdr;
  if (text == "dc") return Method::Dc;
  if (text == "asymptotic") return Method::Asymptotic;
  throw ContractViolation("unknown method '" + text + "'");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

PointResult solve_point(const ChannelSet& channels, const SystemModel& system,
                        const DlrBounds& bounds, Method method, std::uint64_t seed) {
  PointResult out;
  if (!channels.scenario.has_receive_beamformer()) {
    const MisoInstance inst = MisoInstance::from_channels(channels, system);
    const DlrSolution sol =
        method == Method::Fixed ? fixed_lr_solution(inst) : solve_dlr_miso(inst, bounds);
    out.tau = sol.objective * sol.objective;
    out.mse_over_sigma2 = out.tau;
    out.mse_lb_over_sigma2 = mse_lower_bound(MisoInstance{inst.h, inst.power, 1.0});
    out.ratios = sol.r;
    out.equivalent_gain = miso_gains(inst);
    return out;
  }

  const MimoInstance inst = MimoInstance::from_channels(channels, system);
  CVectorXd m;
  DlrSolution dlr;
  switch (method) {
    case Method::Fixed: {
      const std::vector<double> ones(inst.h.size(), 1.0);
      BeamformingOptions opts;
      opts.feasibility.seed = seed;
      m = solve_beamforming(inst, ones, opts).m;
      dlr = solve_dlr_given_m(inst, m, DlrBounds::fixed());
      break;
    }
    case Method::Dlr:
    case Method::Dc:
    case Method::Sdr: {
      JointOptions opts;
      opts.seed = seed;
      opts.method = method == Method::Sdr ? RankOneMethod::SDR : RankOneMethod::DC;
      const MimoSolution sol = solve_joint(inst, bounds, opts);
      m = sol.m;
      dlr = sol.dlr;
      break;
    }
    case Method::Asymptotic:
      m = closed_form_beamformer(channels);
      dlr = solve_dlr_given_m(inst, m, bounds);
      break;
  }
  const MimoInstance unit_noise{inst.h, inst.power, 1.0};
  out.tau = dlr.objective * dlr.objective;
  out.mse_over_sigma2 = out.tau;
  out.mse_lb_over_sigma2 = mse_lower_bound_mimo(unit_noise, m);
  out.ratios = dlr.r;
  out.equivalent_gain = miso_gains(equivalent_instance(inst, m));
  out.m = m;
  return out;
}

void SweepConfig::validate() const {
  require(!k_values.empty() && !nd_values.empty() && !nt_values.empty() && !bounds.empty(),
          "sweep: every range must be non-empty");
  require(!methods.empty(), "sweep: at least one method required");
  require(draws >= 1, "sweep: draws must be >= 1");
  require(sigma2 > 0.0 && std::isfinite(sigma2), "sweep: sigma2 must be positive");
  require(power > 0.0 && std::isfinite(power), "sweep: power must be positive");
  for (int k : k_values) require(k >= 1, "sweep: K must be >= 1");
  for (const auto& b : bounds) b.validate();
  for (int nd : nd_values)
    for (int nt : nt_values) (void)scenario_for(scenario, nd, nt);
}

std::uint64_t draw_seed(std::uint64_t seed, int draw) {
  return mix_seed(seed, {0xD2A3ULL, static_cast<std::uint64_t>(draw)});
}

std::vector<SweepRow> run_sweep(const SweepConfig& config) {
  config.validate();
  struct Job {
    int k, nd, nt;
    DlrBounds bounds;
    Method method;
    int draw;
  };
  std::vector<Job> jobs;
  for (int k : config.k_values)
    for (int nd : config.nd_values)
      for (int nt : config.nt_values)
        for (const auto& b : config.bounds)
          for (Method method : config.methods)
            for (int d = 0; d < config.draws; ++d) jobs.push_back({k, nd, nt, b, method, d});

  std::vector<SweepRow> rows(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    const Scenario scenario = scenario_for(config.scenario, job.nd, job.nt);
    SweepRow& row = rows[i];
    row.scenario = to_string(scenario.tag);
    row.k = job.k;
    row.n_d = scenario.n_d;
    row.n_t = scenario.n_t;
    row.r_min = job.bounds.r_min;
    row.r_max = job.bounds.r_max;
    row.method = to_string(job.method);
    row.draw = job.draw;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const std::uint64_t seed = draw_seed(config.seed, job.draw);
      const ChannelSet channels = draw_channels(scenario, job.k, seed);
      const SystemModel system = make_system(scenario, job.k, config.power, config.sigma2);
      const PointResult r = solve_point(channels, system, job.bounds, job.method, seed);
      row.mse_over_sigma2 = r.mse_over_sigma2;
      row.mse_lb_over_sigma2 = r.mse_lb_over_sigma2;
      row.tau = r.tau;
    } catch (const InfeasibleError&) {
      row.status = "infeasible";
    } catch (const DegenerateChannelError&) {
      row.status = "degenerate";
    }
    if (config.timing) {
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  });
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "scenario,K,N_d,N_t,r_min,r_max,method,draw,mse_over_sigma2,mse_lb_over_sigma2,tau,"
         "seconds,status\n";
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.k << ',' << r.n_d << ',' << r.n_t << ',' << fmt(r.r_min) << ','
        << fmt(r.r_max) << ',' << r.method << ',' << r.draw << ',' << fmt(r.mse_over_sigma2) << ','
        << fmt(r.mse_lb_over_sigma2) << ',' << fmt(r.tau) << ',' << fmt(r.seconds) << ','
        << r.status << '\n';
  }
}

std::vector<SweepSummary> summarize(std::span<const SweepRow> rows) {
  using Key = std::tuple<std::string, int, int, int, double, double, std::string>;
  std::map<Key, std::size_t> index;
  std::vector<SweepSummary> out;
  std::vector<std::vector<double>> mse, lb;
  for (const auto& r : rows) {
    const Key key{r.scenario, r.k, r.n_d, r.n_t, r.r_min, r.r_max, r.method};
    auto [it, fresh] = index.try_emplace(key, out.size());
    if (fresh) {
      SweepSummary s;
      s.scenario = r.scenario;
      s.k = r.k;
      s.n_d = r.n_d;
      s.n_t = r.n_t;
      s.r_min = r.r_min;
      s.r_max = r.r_max;
      s.method = r.method;
      out.push_back(s);
      mse.emplace_back();
      lb.emplace_back();
    }
    if (r.status != "ok") continue;
    mse[it->second].push_back(r.mse_over_sigma2);
    lb[it->second].push_back(r.mse_lb_over_sigma2);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = mse[i];
    out[i].draws = static_cast<int>(v.size());
    if (v.empty()) continue;
    double mean = 0.0, lb_mean = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      mean += v[j];
      lb_mean += lb[i][j];
    }
    mean /= static_cast<double>(v.size());
    lb_mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out[i].mean_mse_over_sigma2 = mean;
    out[i].mean_mse_lb_over_sigma2 = lb_mean;
    out[i].std_mse_over_sigma2 = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
  return out;
}

void write_summary_csv(std::ostream& out, std::span<const SweepSummary> rows) {
  out << "scenario,K,N_d,N_t,r_min,r_max,method,draws,mean_mse_over_sigma2,std_mse_over_sigma2,"
         "mean_mse_lb_over_sigma2\n";
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.k << ',' << r.n_d << ',' << r.n_t << ',' << fmt(r.r_min) << ','
        << fmt(r.r_max) << ',' << r.method << ',' << r.draws << ',' << fmt(r.mean_mse_over_sigma2)
        << ',' << fmt(r.std_mse_over_sigma2) << ',' << fmt(r.mean_mse_lb_over_sigma2) << '\n';
  }
}

std::vector<BarRow> run_bars(const BarsConfig& config) {
  require(config.k >= 1, "bars: K must be >= 1");
  config.bounds.validate();
  const Scenario scenario = scenario_for(config.scenario, config.n_d, config.n_t);
  const std::uint64_t seed = draw_seed(config.seed, 0);
  const ChannelSet channels = draw_channels(scenario, config.k, seed);
  const SystemModel system = make_system(scenario, config.k, config.power, config.sigma2);
  const PointResult r = solve_point(channels, system, config.bounds, Method::Dlr, seed);
  std::vector<BarRow> rows;
  for (int k = 0; k < config.k; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    rows.push_back({k, r.equivalent_gain[ku], r.ratios[ku]});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const BarRow& a, const BarRow& b) { return a.channel_gain < b.channel_gain; });
  return rows;
}

void write_bars_csv(std::ostream& out, std::span<const BarRow> rows) {
  out << "device,channel_gain,dlr_value\n";
  for (const auto& r : rows) out << r.device << ',' << fmt(r.channel_gain) << ',' << fmt(r.dlr_value) << '\n';
}

std::vector<AsymptoticRow> run_asymptotic(const AsymptoticConfig& config) {
  require(!config.antennas.empty() && !config.k_values.empty(), "asymptotic: empty range");
  require(config.draws >= 1, "asymptotic: draws must be >= 1");
  config.bounds.validate();
  struct Job {
    int k, n_d, n_t, draw;
  };
  std::vector<Job> jobs;
  for (int k : config.k_values) {
    for (int n : config.antennas) {
      int nd = 1, nt = 1;
      switch (config.scenario) {
        case ScenarioTag::SISO:
        case ScenarioTag::MISO: nd = n; break;
        case ScenarioTag::SIMO: nt = n; break;
        case ScenarioTag::MIMO:
          nd = config.fixed_antennas;
          nt = n;
          if (nd > nt) std::swap(nd, nt);
          break;
      }
      for (int d = 0; d < config.draws; ++d) jobs.push_back({k, nd, nt, d});
    }
  }
  std::vector<AsymptoticRow> rows(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    const ScenarioTag tag = config.scenario == ScenarioTag::SISO ? ScenarioTag::MISO : config.scenario;
    const Scenario scenario = scenario_for(tag, job.n_d, job.n_t);
    const AsymptoticRegime regime = regime_for(scenario);
    const std::uint64_t seed = draw_seed(config.seed, job.draw);
    const ChannelSet channels = draw_channels(scenario, job.k, seed);
    const SystemModel system = make_system(scenario, job.k, config.power, config.sigma2);
    const Method method = scenario.has_receive_beamformer() ? Method::Asymptotic : Method::Dlr;
    const PointResult r = solve_point(channels, system, config.bounds, method, seed);
    AsymptoticRow& row = rows[i];
    row.scenario = to_string(scenario.tag);
    row.regime = to_string(regime);
    row.k = job.k;
    row.n_d = scenario.n_d;
    row.n_t = scenario.n_t;
    row.draw = job.draw;
    row.mse_over_sigma2 = r.mse_over_sigma2;
    row.theory_over_sigma2 =
        theoretical_mse(regime, job.k, config.power, 1.0, scenario.n_d, scenario.n_t).mse;
    row.mean_abs_r_minus_1 = mean_abs_deviation(r.ratios);
  });
  return rows;
}

void write_asymptotic_csv(std::ostream& out, std::span<const AsymptoticRow> rows) {
  out << "scenario,regime,K,N_d,N_t,draw,mse_over_sigma2,theory_over_sigma2,mean_abs_r_minus_1\n";
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.regime << ',' << r.k << ',' << r.n_d << ',' << r.n_t << ','
        << r.draw << ',' << fmt(r.mse_over_sigma2) << ',' << fmt(r.theory_over_sigma2) << ','
        << fmt(r.mean_abs_r_minus_1) << '\n';
  }
}

Task load_mnist_task(const std::filesystem::path& dir, double fraction, std::uint64_t seed) {
  Task t;
  t.train = subsample(load_mnist_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"),
                      fraction, seed);
  t.test = subsample(load_mnist_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"),
                     fraction, mix_seed(seed, {1}));
  return t;
}

std::vector<TrainRow> run_train(const TrainRunConfig& config) {
  require(config.k >= 1, "train: K must be >= 1");
  require(!config.policies.empty(), "train: at least one method required");
  Task task;
  if (config.task == "synthetic") {
    task = synthetic_task(config.train.seed);
  } else if (config.task == "mnist") {
    task = load_mnist_task(config.mnist_dir, config.mnist_fraction, config.train.seed);
  } else {
    throw ContractViolation("unknown task '" + config.task + "'");
  }
  const Scenario scenario = scenario_for(config.scenario, config.n_d, config.n_t);
  std::vector<TrainRow> rows;
  for (LrPolicy policy : config.policies) {
    TrainConfig cfg = config.train;
    cfg.policy = policy;
    cfg.system = make_system(scenario, config.k, config.power, config.sigma2, config.a);
    for (const auto& log : train_federated(task, cfg, config.k)) rows.push_back({to_string(policy), log});
  }
  return rows;
}

void write_train_csv(std::ostream& out, std::span<const TrainRow> rows) {
  out << "method,round,loss,acc,e_sq,retx\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.log.round << ',' << fmt(r.log.loss) << ',' << fmt(r.log.acc) << ','
        << fmt(r.log.e_sq) << ',' << r.log.retx << '\n';
  }
}

}  // namespace otafl
