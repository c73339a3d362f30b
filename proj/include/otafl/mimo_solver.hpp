#pragma once

// Joint receive-beamforming / DLR design for multi-antenna aggregators.
//
// For unit m the MSE over sigma^2 equals
//
//   tau(m, r) = max_k 1 / (K^2 P_k r_k^2 ||m^H H_k||^2)
//
// Given r, the beamformer is found by bisection on tau over a lifted
// feasibility problem (M = m m^H); given m, the ratios come from the
// closed-form MISO solver on the equivalent channels m^H H_k.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "otafl/aircomp.hpp"
#include "otafl/channel.hpp"
#include "otafl/dlr_miso.hpp"
#include "otafl/numkit.hpp"

namespace otafl {

struct MimoInstance {
  std::vector<CMatrixXd> h;   // N_t x N_d per device
  std::vector<double> power;  // P_k
  double sigma2 = 1.0;

  int devices() const { return static_cast<int>(h.size()); }
  int n_t() const { return static_cast<int>(h.front().rows()); }
  void validate() const;

  static MimoInstance from_channels(const ChannelSet& channels, const SystemModel& system);
};

struct TauInterval {
  double tau_low = 0.0;  // min_k tau_k^low
  double tau_up = 0.0;   // max_k tau_k^up, +inf when some H_k H_k^H is singular
  std::vector<double> device_low;
  std::vector<double> device_up;

  bool bounded() const;
  // max_k tau_k^low: below it some constraint fails for every m.
  double necessary_low() const;
};

/// Rayleigh-Ritz interval of the per-device ratio
/// ||m||^2 / (K^2 P_k r_k^2 ||m^H H_k||^2).
TauInterval tau_interval(const MimoInstance& inst, std::span<const double> ratios);

/// tau(m, r) for an arbitrary nonzero m; +inf when m annihilates some H_k.
double beamforming_objective(const MimoInstance& inst, std::span<const double> ratios,
                             const CVectorXd& m);

enum class RankOneMethod {
  DC,   // relaxed projections, DC rank-one refinement, extraction, randomization
  SDR,  // relaxed projections, extraction, randomization
};

struct FeasibilityOptions {
  RankOneMethod method = RankOneMethod::DC;
  int projection_sweeps = 150;   // alternating-projection sweeps per phase
  int dc_iterations = 40;        // DC linearization steps
  double dc_step = 0.5;          // weight of v v^H added per DC step
  double rank_tolerance = 1e-6;  // Tr(M) - lambda_max(M)
  double eps_feas = 1e-7;        // accepted constraint violation of a certificate
  int randomizations = 200;
  int dual_iterations = 40;      // mirror-descent steps for the infeasibility certificate
  int refine_iterations = 200;   // minorize-maximize steps on the best vector found
  std::uint64_t seed = 0;
  std::optional<CMatrixXd> warm_start;  // initial lifted matrix
};

struct FeasibilityResult {
  bool feasible = false;
  std::optional<CMatrixXd> lifted;   // m m^H when feasible
  std::optional<CVectorXd> m;        // unit certificate when feasible
  double slack = 0.0;                // min_k m^H Q_k m of the best vector tried
  CMatrixXd relaxed;                 // last engine iterate (trace one, PSD)
  bool dual_certificate = false;     // infeasibility proven by a weighted eigenvalue bound
};

/// Decides whether some unit m satisfies
///   m^H (tau K^2 P_k r_k^2 H_k H_k^H - I) m >= 0   for all k.
/// A failure to find a certificate is reported as infeasible.
FeasibilityResult feasibility_check(const MimoInstance& inst, std::span<const double> ratios,
                                    double tau, const FeasibilityOptions& opts = {});

struct BeamformingOptions {
  double delta = 0.0;            // <= 0 selects 1e-4 * tau_low
  double tau_cap_factor = 1e4;   // replaces an infinite tau_up by factor * tau_low
  int random_starts = 8;         // extra random unit vectors refined before bisection
  FeasibilityOptions feasibility;
  std::optional<CVectorXd> initial_m;
};

struct BeamformingResult {
  CVectorXd m;
  double tau = 0.0;          // tau(m, r) of the returned beamformer
  double lower = 0.0;        // final bisection lower end
  int steps = 0;
};

/// Bisection on tau; every certified m tightens the upper end to tau(m, r).
BeamformingResult solve_beamforming(const MimoInstance& inst, std::span<const double> ratios,
                                    const BeamformingOptions& opts = {});

/// Equivalent MISO instance with h'_k = (m^H H_k)^T.
MisoInstance equivalent_instance(const MimoInstance& inst, const CVectorXd& m);

DlrSolution solve_dlr_given_m(const MimoInstance& inst, const CVectorXd& m,
                              const DlrBounds& bounds, double delta = kDefaultDlrAccuracy);

struct JointOptions {
  double delta1 = 0.0;        // beamforming bisection accuracy, <= 0 selects 1e-4 * tau_low
  double delta2 = kDefaultDlrAccuracy;
  double delta_conv = 1e-6;   // relative change in tau that stops the alternation
  int max_iter = 30;
  int restarts = 1;
  std::uint64_t seed = 0;
  RankOneMethod method = RankOneMethod::DC;
};

struct MimoSolution {
  CVectorXd m;
  DlrSolution dlr;
  double tau = 0.0;             // = MSE / sigma^2
  double mse = 0.0;
  std::vector<double> history;  // tau after each alternation
  int restart = 0;              // index of the winning start
};

/// Alternates beamforming and DLR updates starting from r_k = 1. Start 0 is
/// deterministic; further starts use randomized warm starts and the best tau
/// wins.
MimoSolution solve_joint(const MimoInstance& inst, const DlrBounds& bounds,
                         const JointOptions& opts = {});

/// sigma^2 / (sum_i sqrt(P_i) ||m^H H_i||)^2 for unit m.
double mse_lower_bound_mimo(const MimoInstance& inst, const CVectorXd& m);

/// Transmit configuration b_k = H_k^H m / (K sqrt(eta) r_k ||m^H H_k||^2).
TransmitConfig transmit_config(const MimoInstance& inst, const CVectorXd& m,
                               const DlrSolution& dlr);

}  // namespace otafl
