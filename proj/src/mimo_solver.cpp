#include "otafl/mimo_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "otafl/errors.hpp"
#include "otafl/rng.hpp"

namespace otafl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Euclidean projection of a vector onto the probability simplex.
RVector<double> project_simplex(const RVector<double>& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

// Projection onto {M >= 0, Tr M = 1}.
CMatrixXd project_spectraplex(const CMatrixXd& m) {
  const auto eig = hermitian_eig(m);
  const RVector<double> lam = project_simplex(eig.eigenvalues);
  CMatrixXd out = eig.eigenvectors * lam.cast<Complex>().asDiagonal() * eig.eigenvectors.adjoint();
  return (out + out.adjoint()) / 2.0;
}

CMatrixXd hermitian_part(const CMatrixXd& m) { return (m + m.adjoint()) / 2.0; }

struct Constraints {
  std::vector<CMatrixXd> q;       // tau K^2 P_k r_k^2 A_k - I
  std::vector<double> q_norm2;    // ||Q_k||_F^2

  double margin(const CVectorXd& v) const {
    double worst = kInf;
    for (const auto& qk : q) worst = std::min(worst, std::real(v.dot(qk * v)));
    return worst;
  }
  double lifted_margin(const CMatrixXd& m) const {
    double worst = kInf;
    for (const auto& qk : q) worst = std::min(worst, frobenius_inner(qk, m));
    return worst;
  }
};

Constraints build_constraints(const MimoInstance& inst, std::span<const double> ratios,
                              double tau) {
  const double k2 = static_cast<double>(inst.devices()) * inst.devices();
  const auto n = inst.n_t();
  Constraints c;
  for (int k = 0; k < inst.devices(); ++k) {
    const double w = tau * k2 * inst.power[k] * ratios[k] * ratios[k];
    CMatrixXd qk = hermitian_part(w * (inst.h[k] * inst.h[k].adjoint()));
    qk -= CMatrixXd::Identity(n, n);
    c.q_norm2.push_back(qk.squaredNorm());
    c.q.push_back(std::move(qk));
  }
  return c;
}

// min_{w in simplex} lambda_max(sum_k w_k Q_k) by exponentiated subgradient
// steps. A negative value bounds every unit m away from feasibility.
double dual_bound(const Constraints& c, int iterations) {
  const std::size_t kdev = c.q.size();
  RVector<double> w = RVector<double>::Constant(static_cast<Eigen::Index>(kdev), 1.0 / kdev);
  double best = kInf;
  const auto n = c.q.front().rows();
  for (int it = 0; it < iterations; ++it) {
    CMatrixXd s = CMatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < kdev; ++k) s += w(static_cast<Eigen::Index>(k)) * c.q[k];
    const auto eig = hermitian_eig(hermitian_part(s));
    const double value = eig.eigenvalues(n - 1);
    best = std::min(best, value);
    if (kdev == 1) break;
    const CVectorXd v = eig.eigenvectors.col(n - 1);
    RVector<double> g(static_cast<Eigen::Index>(kdev));
    for (std::size_t k = 0; k < kdev; ++k) g(static_cast<Eigen::Index>(k)) = std::real(v.dot(c.q[k] * v));
    const double spread = g.maxCoeff() - g.minCoeff();
    if (!(spread > 0.0)) break;
    const double step = 2.0 / (spread * std::sqrt(static_cast<double>(it + 1)));
    RVector<double> logw = w.array().log() - step * (g.array() - g.minCoeff());
    w = (logw.array() - logw.maxCoeff()).exp();
    w /= w.sum();
    w = w.cwiseMax(1e-300);
  }
  return best;
}

CMatrixXd random_lifted(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CMatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = Complex(normal(rng), normal(rng));
  CMatrixXd m = g * g.adjoint();
  return hermitian_part(m / std::real(m.trace()));
}

CVectorXd random_unit(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CVectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(normal(rng), normal(rng));
  return v / v.norm();
}

void check_ratios(const MimoInstance& inst, std::span<const double> ratios) {
  require(ratios.size() == inst.h.size(), "one DLR ratio per device required");
  for (double r : ratios) require(r > 0.0 && std::isfinite(r), "DLR ratios must be positive");
}

// Weighted gains f_k(m) = K^2 P_k r_k^2 m^H A_k m; tau(m) = 1 / min_k f_k(m).
struct GainModel {
  std::vector<CMatrixXd> a;  // weighted A_k

  double worst(const CVectorXd& m) const {
    double out = kInf;
    for (const auto& ak : a) out = std::min(out, std::real(m.dot(ak * m)));
    return out;
  }
};

GainModel build_gains(const MimoInstance& inst, std::span<const double> ratios) {
  const double k2 = static_cast<double>(inst.devices()) * inst.devices();
  GainModel g;
  for (int k = 0; k < inst.devices(); ++k) {
    const double w = k2 * inst.power[k] * ratios[k] * ratios[k];
    g.a.push_back(hermitian_part(w * (inst.h[k] * inst.h[k].adjoint())));
  }
  return g;
}

// max_{||m|| <= 1} min_k alpha_k + Re(c_k^H m) through its dual
// min_{lambda in simplex} lambda.alpha + ||sum_k lambda_k c_k||, solved by
// accelerated projected gradient with backtracking.
std::optional<CVectorXd> maximize_affine_min(const RVector<double>& alpha,
                                             const std::vector<CVectorXd>& c, int iterations) {
  const Eigen::Index kdev = alpha.size();
  const Eigen::Index n = c.front().size();
  auto combine = [&](const RVector<double>& lam) {
    CVectorXd u = CVectorXd::Zero(n);
    for (Eigen::Index k = 0; k < kdev; ++k) u += lam(k) * c[static_cast<std::size_t>(k)];
    return u;
  };
  auto value = [&](const RVector<double>& lam) { return lam.dot(alpha) + combine(lam).norm(); };
  auto gradient = [&](const RVector<double>& lam) {
    const CVectorXd u = combine(lam);
    const double nu = u.norm();
    RVector<double> g = alpha;
    if (nu > 0.0) {
      for (Eigen::Index k = 0; k < kdev; ++k) g(k) += std::real(c[static_cast<std::size_t>(k)].dot(u)) / nu;
    }
    return g;
  };

  RVector<double> lam = RVector<double>::Constant(kdev, 1.0 / static_cast<double>(kdev));
  RVector<double> y = lam;
  double t = 1.0;
  double step = 1.0;
  for (const auto& ck : c) step = std::min(step, 1.0 / std::max(1e-300, ck.squaredNorm()));
  double f_lam = value(lam);
  for (int it = 0; it < iterations; ++it) {
    const RVector<double> g = gradient(y);
    const double f_y = value(y);
    RVector<double> next;
    for (int ls = 0; ls < 60; ++ls) {
      next = project_simplex(y - step * g);
      const RVector<double> d = next - y;
      if (value(next) <= f_y + g.dot(d) + d.squaredNorm() / (2.0 * step)) break;
      step *= 0.5;
    }
    const double f_next = value(next);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (f_next > f_lam) {
      // Restart the momentum when the objective goes up.
      y = lam;
      t = 1.0;
      continue;
    }
    y = next + ((t - 1.0) / t_next) * (next - lam);
    const double change = (next - lam).lpNorm<1>();
    lam = next;
    f_lam = f_next;
    t = t_next;
    step *= 1.5;
    if (change < 1e-14) break;
  }
  const CVectorXd u = combine(lam);
  const double nu = u.norm();
  if (!(nu > 0.0)) return std::nullopt;
  return CVectorXd(u / nu);
}

// Minorize-maximize ascent on min_k f_k(m) over the unit sphere. Each f_k is
// convex, so its tangent at the current point is a global under-estimator.
CVectorXd refine_beamformer(const GainModel& gains, CVectorXd m, int iterations) {
  m /= m.norm();
  double current = gains.worst(m);
  const std::size_t kdev = gains.a.size();
  for (int it = 0; it < iterations; ++it) {
    RVector<double> alpha(static_cast<Eigen::Index>(kdev));
    std::vector<CVectorXd> c(kdev);
    for (std::size_t k = 0; k < kdev; ++k) {
      const CVectorXd am = gains.a[k] * m;
      alpha(static_cast<Eigen::Index>(k)) = -std::real(m.dot(am));
      c[k] = 2.0 * am;
    }
    const auto next = maximize_affine_min(alpha, c, 400);
    if (!next) break;
    const double value = gains.worst(*next);
    if (!(value > current)) break;
    const double gain = value - current;
    m = *next;
    current = value;
    if (gain <= 1e-13 * current) break;
  }
  return m;
}

}  // namespace

void MimoInstance::validate() const {
  require(!h.empty(), "MIMO instance needs at least one device");
  require(power.size() == h.size(), "MIMO instance: one power budget per device");
  require(sigma2 >= 0.0, "MIMO instance: noise power must be >= 0");
  for (std::size_t k = 0; k < h.size(); ++k) {
    require(h[k].rows() == h.front().rows() && h[k].cols() == h.front().cols(),
            "MIMO instance: all channel matrices must share one shape");
    require(h[k].allFinite(), "MIMO instance: channel must be finite");
    require(power[k] > 0.0, "MIMO instance: power must be positive");
    if (!(h[k].norm() > 0.0)) {
      throw DegenerateChannelError("device " + std::to_string(k) + " has a zero channel");
    }
  }
}

MimoInstance MimoInstance::from_channels(const ChannelSet& channels, const SystemModel& system) {
  require(system.devices() == channels.size(), "system and channel device counts differ");
  MimoInstance inst{channels.h, system.power, system.sigma2};
  inst.validate();
  return inst;
}

bool TauInterval::bounded() const { return std::isfinite(tau_up); }

double TauInterval::necessary_low() const {
  return *std::max_element(device_low.begin(), device_low.end());
}

TauInterval tau_interval(const MimoInstance& inst, std::span<const double> ratios) {
  inst.validate();
  check_ratios(inst, ratios);
  const double k2 = static_cast<double>(inst.devices()) * inst.devices();
  TauInterval out;
  out.tau_low = kInf;
  out.tau_up = 0.0;
  for (int k = 0; k < inst.devices(); ++k) {
    const auto eig = hermitian_eig(inst.h[k] * inst.h[k].adjoint());
    const double lmax = eig.eigenvalues(eig.eigenvalues.size() - 1);
    const double lmin = eig.eigenvalues(0);
    const double w = k2 * inst.power[k] * ratios[k] * ratios[k];
    const double low = 1.0 / (w * lmax);
    const double up = lmin > tol::kRank * lmax ? 1.0 / (w * lmin) : kInf;
    out.device_low.push_back(low);
    out.device_up.push_back(up);
    out.tau_low = std::min(out.tau_low, low);
    out.tau_up = std::max(out.tau_up, up);
  }
  return out;
}

double beamforming_objective(const MimoInstance& inst, std::span<const double> ratios,
                             const CVectorXd& m) {
  check_ratios(inst, ratios);
  require(m.size() == inst.n_t(), "beamformer length must equal N_t");
  const double m2 = m.squaredNorm();
  require(m2 > 0.0, "beamformer must be nonzero");
  const double k2 = static_cast<double>(inst.devices()) * inst.devices();
  double tau = 0.0;
  for (int k = 0; k < inst.devices(); ++k) {
    const double gain = (m.adjoint() * inst.h[k]).squaredNorm();
    if (!(gain > 0.0)) return kInf;
    tau = std::max(tau, m2 / (k2 * inst.power[k] * ratios[k] * ratios[k] * gain));
  }
  return tau;
}

FeasibilityResult feasibility_check(const MimoInstance& inst, std::span<const double> ratios,
                                    double tau, const FeasibilityOptions& opts) {
  inst.validate();
  check_ratios(inst, ratios);
  require(tau > 0.0 && std::isfinite(tau), "feasibility_check: tau must be positive and finite");

  const Eigen::Index n = inst.n_t();
  const Constraints cons = build_constraints(inst, ratios, tau);
  FeasibilityResult res;
  res.slack = -kInf;

  CVectorXd best_v;
  auto consider = [&](const CVectorXd& v) {
    const double margin = cons.margin(v);
    if (margin > res.slack) {
      res.slack = margin;
      best_v = v;
    }
    return margin >= -opts.eps_feas;
  };
  auto accept = [&](const CMatrixXd& relaxed) {
    res.feasible = true;
    res.m = best_v;
    res.lifted = best_v * best_v.adjoint();
    res.relaxed = relaxed;
    return res;
  };

  // Each constraint alone needs lambda_max(Q_k) >= 0; a weighted combination
  // with a negative top eigenvalue rules out every unit m.
  for (const auto& qk : cons.q) {
    const auto eig = hermitian_eig(qk);
    if (eig.eigenvalues(n - 1) < -opts.eps_feas) {
      res.dual_certificate = true;
      res.slack = std::max(res.slack, eig.eigenvalues(n - 1));
      res.relaxed = CMatrixXd::Identity(n, n) / static_cast<double>(n);
      return res;
    }
  }
  if (opts.dual_iterations > 0 && dual_bound(cons, opts.dual_iterations) < -opts.eps_feas) {
    res.dual_certificate = true;
    res.relaxed = CMatrixXd::Identity(n, n) / static_cast<double>(n);
    return res;
  }

  CMatrixXd lifted = opts.warm_start && opts.warm_start->rows() == n
                         ? project_spectraplex(hermitian_part(*opts.warm_start))
                         : CMatrixXd(CMatrixXd::Identity(n, n) / static_cast<double>(n));

  // Alternating projections between the trace-one PSD set and the K
  // half-spaces <Q_k, M> >= 0.
  auto project_feasible = [&](CMatrixXd& m) {
    double last_check = -kInf;
    for (int sweep = 0; sweep < opts.projection_sweeps; ++sweep) {
      m = project_spectraplex(m);
      const double worst = cons.lifted_margin(m);
      if (worst >= 0.0) return true;
      if (sweep % 25 == 24) {
        if (worst <= last_check + 1e-3 * std::abs(last_check)) return false;  // stalled
        last_check = worst;
      }
      for (std::size_t k = 0; k < cons.q.size(); ++k) {
        const double v = frobenius_inner(cons.q[k], m);
        if (v < 0.0 && cons.q_norm2[k] > 0.0) m += ((1e-9 - v) / cons.q_norm2[k]) * cons.q[k];
      }
    }
    m = project_spectraplex(m);
    return cons.lifted_margin(m) >= 0.0;
  };

  bool relaxed_ok = project_feasible(lifted);
  if (consider(principal_eigenvector(lifted))) return accept(lifted);

  if (opts.method == RankOneMethod::DC && relaxed_ok) {
    // Linearized DC steps on Tr(M) - lambda_max(M): push mass onto the current
    // principal direction, then restore feasibility.
    for (int it = 0; it < opts.dc_iterations; ++it) {
      const auto eig = hermitian_eig(lifted);
      const CVectorXd v = eig.eigenvectors.col(n - 1);
      const double gap = std::real(lifted.trace()) - eig.eigenvalues(n - 1);
      if (gap <= opts.rank_tolerance) break;
      CMatrixXd trial = lifted + opts.dc_step * (v * v.adjoint());
      if (!project_feasible(trial)) break;
      lifted = trial;
      if (consider(principal_eigenvector(lifted))) return accept(lifted);
    }
  }

  // Gaussian randomization around the relaxed solution.
  if (opts.randomizations > 0) {
    const auto eig = hermitian_eig(lifted);
    const CMatrixXd root =
        eig.eigenvectors *
        eig.eigenvalues.cwiseMax(0.0).cwiseSqrt().cast<Complex>().asDiagonal();
    Rng rng = make_rng(opts.seed, {0x5A4D9ULL});
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    for (int s = 0; s < opts.randomizations; ++s) {
      CVectorXd z(n);
      for (Eigen::Index i = 0; i < n; ++i) z(i) = Complex(normal(rng), normal(rng));
      CVectorXd xi = root * z;
      const double norm = xi.norm();
      if (!(norm > 0.0)) continue;
      xi /= norm;
      consider(xi);
    }
    if (res.slack >= -opts.eps_feas) return accept(lifted);
  }

  // Local ascent from the best vector seen so far.
  if (opts.refine_iterations > 0 && best_v.size() == n) {
    const GainModel gains = build_gains(inst, ratios);
    if (consider(refine_beamformer(gains, best_v, opts.refine_iterations))) return accept(lifted);
  }
  res.relaxed = lifted;
  return res;
}

BeamformingResult solve_beamforming(const MimoInstance& inst, std::span<const double> ratios,
                                    const BeamformingOptions& opts) {
  const TauInterval interval = tau_interval(inst, ratios);
  const double delta = opts.delta > 0.0 ? opts.delta : 1e-4 * interval.tau_low;
  double lower = interval.necessary_low();
  double upper = interval.bounded() ? interval.tau_up : opts.tau_cap_factor * interval.tau_low;

  // Any vector certifies every tau above its own objective.
  BeamformingResult out;
  out.tau = kInf;
  auto offer = [&](const CVectorXd& v) {
    if (v.size() != inst.n_t() || !(v.norm() > 0.0)) return;
    const CVectorXd unit = v / v.norm();
    const double t = beamforming_objective(inst, ratios, unit);
    if (t < out.tau) {
      out.tau = t;
      out.m = unit;
    }
  };
  // Local ascent from several starts gives the bisection a tight upper end.
  std::vector<CVectorXd> starts;
  if (opts.initial_m) starts.push_back(*opts.initial_m);
  CVectorXd combined = CVectorXd::Zero(inst.n_t());
  for (int k = 0; k < inst.devices(); ++k) {
    starts.push_back(principal_eigenvector(inst.h[k] * inst.h[k].adjoint()));
    combined += starts.back();
  }
  starts.push_back(combined);
  Rng start_rng = make_rng(opts.feasibility.seed, {0x57A27ULL});
  for (int s = 0; s < opts.random_starts; ++s) starts.push_back(random_unit(start_rng, inst.n_t()));
  const GainModel gains = build_gains(inst, ratios);
  for (const auto& v : starts) {
    offer(v);
    if (opts.feasibility.refine_iterations > 0 && v.norm() > 0.0) {
      offer(refine_beamformer(gains, v, opts.feasibility.refine_iterations));
    }
  }
  upper = std::min(upper, out.tau);

  FeasibilityOptions feas = opts.feasibility;
  if (!std::isfinite(out.tau)) {
    const auto res = feasibility_check(inst, ratios, upper, feas);
    if (!res.feasible) throw InfeasibleError("solve_beamforming: no feasible tau in the search interval");
    offer(*res.m);
    upper = std::min(upper, out.tau);
    feas.warm_start = res.relaxed;
  }

  while (upper - lower > delta) {
    const double mid = 0.5 * (lower + upper);
    feas.seed = mix_seed(opts.feasibility.seed, {static_cast<std::uint64_t>(out.steps)});
    const auto res = feasibility_check(inst, ratios, mid, feas);
    ++out.steps;
    if (res.feasible) {
      offer(*res.m);
      upper = std::min(mid, out.tau);
      feas.warm_start = res.relaxed;
    } else {
      lower = mid;
    }
  }
  if (opts.feasibility.refine_iterations > 0) {
    offer(refine_beamformer(gains, out.m, opts.feasibility.refine_iterations));
  }
  out.lower = std::min(lower, out.tau);
  return out;
}

MisoInstance equivalent_instance(const MimoInstance& inst, const CVectorXd& m) {
  inst.validate();
  require(m.size() == inst.n_t(), "beamformer length must equal N_t");
  MisoInstance eq;
  for (const auto& hk : inst.h) eq.h.push_back(hk.transpose() * m.conjugate());
  eq.power = inst.power;
  eq.sigma2 = inst.sigma2;
  return eq;
}

DlrSolution solve_dlr_given_m(const MimoInstance& inst, const CVectorXd& m,
                              const DlrBounds& bounds, double delta) {
  require(std::abs(m.norm() - 1.0) <= 1e-9, "solve_dlr_given_m: beamformer must have unit norm");
  return solve_dlr_miso(equivalent_instance(inst, m), bounds, delta);
}

double mse_lower_bound_mimo(const MimoInstance& inst, const CVectorXd& m) {
  require(std::abs(m.norm() - 1.0) <= 1e-9, "mse_lower_bound_mimo: beamformer must have unit norm");
  return mse_lower_bound(equivalent_instance(inst, m));
}

TransmitConfig transmit_config(const MimoInstance& inst, const CVectorXd& m,
                               const DlrSolution& dlr) {
  const MisoInstance eq = equivalent_instance(inst, m);
  TransmitConfig cfg;
  cfg.eta = dlr.eta;
  cfg.b = transmit_coefficients(eq, dlr.eta, dlr.r);
  if (inst.n_t() > 1) cfg.m = m;
  return cfg;
}

MimoSolution solve_joint(const MimoInstance& inst, const DlrBounds& bounds,
                         const JointOptions& opts) {
  inst.validate();
  bounds.validate();
  require(opts.max_iter >= 1, "solve_joint: max_iter must be >= 1");
  require(opts.restarts >= 1, "solve_joint: restarts must be >= 1");

  std::optional<MimoSolution> best;
  for (int start = 0; start < opts.restarts; ++start) {
    Rng rng = make_rng(opts.seed, {0x701E7ULL, static_cast<std::uint64_t>(start)});
    std::vector<double> ratios(inst.h.size(), 1.0);
    MimoSolution current;
    current.restart = start;
    std::optional<CVectorXd> previous_m;
    std::optional<CMatrixXd> warm;
    if (start > 0) {
      warm = random_lifted(rng, inst.n_t());
      previous_m = random_unit(rng, inst.n_t());
    }
    double tau_prev = kInf;
    bool have = false;
    try {
      for (int it = 0; it < opts.max_iter; ++it) {
        BeamformingOptions bf;
        bf.delta = opts.delta1;
        bf.feasibility.method = opts.method;
        bf.feasibility.seed = mix_seed(opts.seed, {static_cast<std::uint64_t>(start),
                                                   static_cast<std::uint64_t>(it)});
        bf.feasibility.warm_start = warm;
        bf.initial_m = previous_m;
        const BeamformingResult beam = solve_beamforming(inst, ratios, bf);
        DlrSolution dlr = solve_dlr_given_m(inst, beam.m, bounds, opts.delta2);
        const double tau = dlr.objective * dlr.objective;
        if (have && tau > tau_prev) break;  // keep the last non-increasing iterate
        current.m = beam.m;
        current.dlr = std::move(dlr);
        current.tau = tau;
        current.history.push_back(tau);
        have = true;
        const bool converged =
            std::isfinite(tau_prev) && std::abs(tau_prev - tau) <= opts.delta_conv * tau_prev;
        tau_prev = tau;
        ratios = current.dlr.r;
        previous_m = beam.m;
        warm.reset();
        if (converged) break;
      }
    } catch (const InfeasibleError&) {
      if (!have) continue;
    }
    if (!have) continue;
    current.mse = current.tau * inst.sigma2;
    if (!best || current.tau < best->tau) best = std::move(current);
  }
  if (!best) throw InfeasibleError("solve_joint: every start was infeasible");
  return *best;
}

}  // namespace otafl
