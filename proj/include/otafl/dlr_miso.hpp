#pragma once

// Closed-form dynamic-learning-rate (DLR) design for single-antenna receivers.
//
// With l_k = 1/r_k and c_k = 1 / (K sqrt(P_k) ||h_k||) the MSE-optimal DLR
// problem is the linear program
//
//   min_l max_k c_k l_k   s.t.  sum_k l_k = K,  1/r_max <= l_k <= 1/r_min
//
// and the achieved MSE is sigma^2 (max_k c_k l_k)^2.

#include <span>
#include <vector>

#include "otafl/aircomp.hpp"
#include "otafl/channel.hpp"
#include "otafl/numkit.hpp"

namespace otafl {

struct DlrBounds {
  double r_min = 1.0 / 1.2;
  double r_max = 1.0 / 0.8;

  // r_min <= 1 <= r_max keeps r_k = 1 feasible.
  void validate() const;
  double l_low() const { return 1.0 / r_max; }
  double l_high() const { return 1.0 / r_min; }

  static DlrBounds fixed() { return {1.0, 1.0}; }
};

struct MisoInstance {
  std::vector<CVectorXd> h;   // A_k = h_k^T b_k
  std::vector<double> power;  // P_k
  double sigma2 = 1.0;

  int devices() const { return static_cast<int>(h.size()); }
  void validate() const;
  // c_k = 1 / (K sqrt(P_k) ||h_k||)
  std::vector<double> weights() const;

  static MisoInstance from_channels(const ChannelSet& channels, const SystemModel& system);
};

struct DlrSolution {
  std::vector<double> l;   // 1 / r_k
  std::vector<double> r;   // DLR ratios
  double eta = 0.0;
  std::vector<CVectorXd> b;
  double objective = 0.0;  // max_k c_k l_k
  double mse = 0.0;        // objective^2 sigma^2
};

inline constexpr double kDefaultDlrAccuracy = 1e-6;

/// Per-candidate bisection over the maximizing device, clipping the others.
/// Throws InfeasibleError when no candidate reaches sum l = K.
DlrSolution solve_dlr_miso(const MisoInstance& inst, const DlrBounds& bounds,
                           double delta = kDefaultDlrAccuracy);

/// Fills eta, b, objective and mse for the given ratios.
DlrSolution solution_from_ratios(const MisoInstance& inst, std::span<const double> ratios);

/// r_k = 1 for every device.
DlrSolution fixed_lr_solution(const MisoInstance& inst);

/// sigma^2 / (sum_i sqrt(P_i) ||h_i||)^2
double mse_lower_bound(const MisoInstance& inst);

/// b_k = conj(h_k) / (K sqrt(eta) ||h_k||^2 r_k)
std::vector<CVectorXd> transmit_coefficients(const MisoInstance& inst, double eta,
                                             std::span<const double> ratios);

/// eta = max_k 1 / (K^2 P_k r_k^2 ||h_k||^2)
double scaling_factor(const MisoInstance& inst, std::span<const double> ratios);

}  // namespace otafl
