#include "otafl/dlr_miso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "otafl/errors.hpp"

namespace otafl {

void DlrBounds::validate() const {
  require(std::isfinite(r_min) && std::isfinite(r_max) && r_min > 0.0,
          "DLR bounds must be positive and finite");
  require(r_min <= 1.0 && 1.0 <= r_max, "DLR bounds must satisfy r_min <= 1 <= r_max");
}

void MisoInstance::validate() const {
  require(!h.empty(), "MISO instance needs at least one device");
  require(power.size() == h.size(), "MISO instance: one power budget per device");
  require(sigma2 >= 0.0, "MISO instance: noise power must be >= 0");
  for (std::size_t k = 0; k < h.size(); ++k) {
    require(power[k] > 0.0, "MISO instance: power must be positive");
    require(h[k].size() >= 1 && h[k].allFinite(), "MISO instance: channel must be finite");
    if (!(h[k].norm() > 0.0)) {
      throw DegenerateChannelError("device " + std::to_string(k) + " has a zero channel");
    }
  }
}

std::vector<double> MisoInstance::weights() const {
  const double k = static_cast<double>(h.size());
  std::vector<double> c(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) c[i] = 1.0 / (k * std::sqrt(power[i]) * h[i].norm());
  return c;
}

MisoInstance MisoInstance::from_channels(const ChannelSet& channels, const SystemModel& system) {
  require(!channels.scenario.has_receive_beamformer(),
          "MISO instance needs a single receive antenna");
  require(system.devices() == channels.size(), "system and channel device counts differ");
  MisoInstance inst;
  for (int k = 0; k < channels.size(); ++k) inst.h.push_back(channels.transmit_vector(k));
  inst.power = system.power;
  inst.sigma2 = system.sigma2;
  inst.validate();
  return inst;
}

double scaling_factor(const MisoInstance& inst, std::span<const double> ratios) {
  require(ratios.size() == inst.h.size(), "scaling_factor: one ratio per device");
  const double k2 = static_cast<double>(inst.h.size() * inst.h.size());
  double eta = 0.0;
  for (std::size_t i = 0; i < inst.h.size(); ++i) {
    require(ratios[i] > 0.0, "scaling_factor: ratios must be positive");
    eta = std::max(eta, 1.0 / (k2 * inst.power[i] * ratios[i] * ratios[i] * inst.h[i].squaredNorm()));
  }
  return eta;
}

std::vector<CVectorXd> transmit_coefficients(const MisoInstance& inst, double eta,
                                             std::span<const double> ratios) {
  require(eta > 0.0, "transmit_coefficients: eta must be positive");
  require(ratios.size() == inst.h.size(), "transmit_coefficients: one ratio per device");
  const double k = static_cast<double>(inst.h.size());
  std::vector<CVectorXd> b;
  b.reserve(inst.h.size());
  for (std::size_t i = 0; i < inst.h.size(); ++i) {
    const double n2 = inst.h[i].squaredNorm();
    if (!(n2 > 0.0)) throw DegenerateChannelError("transmit_coefficients: zero channel");
    require(ratios[i] > 0.0, "transmit_coefficients: ratios must be positive");
    b.push_back(inst.h[i].conjugate() / (k * std::sqrt(eta) * n2 * ratios[i]));
  }
  return b;
}

double mse_lower_bound(const MisoInstance& inst) {
  inst.validate();
  double sum = 0.0;
  for (std::size_t i = 0; i < inst.h.size(); ++i) sum += std::sqrt(inst.power[i]) * inst.h[i].norm();
  return inst.sigma2 / (sum * sum);
}

DlrSolution solution_from_ratios(const MisoInstance& inst, std::span<const double> ratios) {
  inst.validate();
  require(ratios.size() == inst.h.size(), "solution_from_ratios: one ratio per device");
  DlrSolution sol;
  sol.r.assign(ratios.begin(), ratios.end());
  sol.l.resize(sol.r.size());
  const auto c = inst.weights();
  for (std::size_t i = 0; i < sol.r.size(); ++i) {
    require(sol.r[i] > 0.0, "solution_from_ratios: ratios must be positive");
    sol.l[i] = 1.0 / sol.r[i];
    sol.objective = std::max(sol.objective, c[i] * sol.l[i]);
  }
  sol.eta = scaling_factor(inst, sol.r);
  sol.b = transmit_coefficients(inst, sol.eta, sol.r);
  sol.mse = sol.objective * sol.objective * inst.sigma2;
  return sol;
}

DlrSolution fixed_lr_solution(const MisoInstance& inst) {
  const std::vector<double> ones(inst.h.size(), 1.0);
  return solution_from_ratios(inst, ones);
}

namespace {

struct Candidate {
  std::vector<double> l;
  double objective = std::numeric_limits<double>::infinity();
};

// l_i = clip(c_k l_k / c_i) for every device, keeping l_k itself.
double fill_clipped(std::span<const double> c, std::size_t k, double lk, double lo, double hi,
                    std::vector<double>& l) {
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    l[i] = (i == k) ? lk : std::clamp(c[k] * lk / c[i], lo, hi);
    sum += l[i];
  }
  return sum;
}

// The clipped sum is piecewise linear in l_k; once bisection has located the
// right piece, solve it exactly so that sum l = K holds to rounding.
double polish(std::span<const double> c, std::size_t k, double lk, double lo, double hi,
              double target) {
  double fixed_sum = 0.0;
  double slope = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double v = (i == k) ? lk : c[k] * lk / c[i];
    if (i != k && v <= lo) fixed_sum += lo;
    else if (i != k && v >= hi) fixed_sum += hi;
    else slope += c[k] / c[i];
  }
  if (!(slope > 0.0)) return lk;
  return std::clamp((target - fixed_sum) / slope, lo, hi);
}

}  // namespace

DlrSolution solve_dlr_miso(const MisoInstance& inst, const DlrBounds& bounds, double delta) {
  inst.validate();
  bounds.validate();
  require(delta > 0.0, "solve_dlr_miso: accuracy must be positive");

  const auto c = inst.weights();
  const std::size_t n = c.size();
  const double target = static_cast<double>(n);
  const double lo = bounds.l_low();
  const double hi = bounds.l_high();

  Candidate best;
  std::vector<double> l(n);
  for (std::size_t k = 0; k < n; ++k) {
    // Lipschitz constant of the clipped sum in l_k bounds the bisection depth.
    double lipschitz = 0.0;
    for (double ci : c) lipschitz += c[k] / ci;
    const double width = hi - lo;
    const int max_iter =
        width > 0.0 ? static_cast<int>(std::ceil(std::log2(std::max(1.0, width * lipschitz / delta)))) + 8
                    : 0;

    double a = lo, b = hi;
    double lk = lo;
    double sum = fill_clipped(c, k, lk, lo, hi, l);
    bool found = std::abs(sum - target) <= delta;
    if (!found) {
      lk = hi;
      sum = fill_clipped(c, k, lk, lo, hi, l);
      found = std::abs(sum - target) <= delta;
    }
    const double sum_lo = fill_clipped(c, k, lo, lo, hi, l);
    const double sum_hi = fill_clipped(c, k, hi, lo, hi, l);
    if (!found && (sum_lo > target || sum_hi < target)) continue;  // no root for this k

    for (int it = 0; !found && it < max_iter; ++it) {
      lk = 0.5 * (a + b);
      sum = fill_clipped(c, k, lk, lo, hi, l);
      if (std::abs(sum - target) <= delta) found = true;
      else if (sum >= target) b = lk;
      else a = lk;
    }
    if (!found) continue;

    const double refined = polish(c, k, lk, lo, hi, target);
    std::vector<double> trial(n);
    const double refined_sum = fill_clipped(c, k, refined, lo, hi, trial);
    if (std::abs(refined_sum - target) <= std::abs(sum - target)) {
      lk = refined;
      sum = fill_clipped(c, k, lk, lo, hi, l);
    } else {
      sum = fill_clipped(c, k, lk, lo, hi, l);
    }

    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) objective = std::max(objective, c[i] * l[i]);
    if (objective < best.objective) {
      best.objective = objective;
      best.l = l;
    }
  }

  if (best.l.empty()) {
    throw InfeasibleError("solve_dlr_miso: no DLR assignment reaches sum l = K within bounds");
  }
  std::vector<double> ratios(n);
  for (std::size_t i = 0; i < n; ++i) ratios[i] = 1.0 / best.l[i];
  DlrSolution sol = solution_from_ratios(inst, ratios);
  sol.l = best.l;
  sol.objective = best.objective;
  sol.mse = sol.objective * sol.objective * inst.sigma2;
  return sol;
}

}  // namespace otafl
