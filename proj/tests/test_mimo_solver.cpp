#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "otafl/mimo_solver.hpp"

using namespace otafl;

namespace {

MimoInstance random_instance(int k, int nd, int nt, std::uint64_t seed) {
  const auto ch = draw_channels(Scenario::make(nd == 1 ? ScenarioTag::SIMO : ScenarioTag::MIMO, nd, nt), k, seed);
  return MimoInstance{ch.h, std::vector<double>(static_cast<std::size_t>(k), 1.0), 1.0};
}

double grid_optimum(const MimoInstance& inst, const std::vector<double>& r) {
  return oracle::angular_grid_min([&](const CVectorXd& m) { return oracle::tau_of(inst.h, inst.power, r, m); });
}

}  // namespace

TEST(TauInterval, IdentitySingleDevice) {
  const MimoInstance inst{{CMatrixXd::Identity(2, 2)}, {1.0}, 1.0};
  const std::vector<double> r{1.0};
  const auto iv = tau_interval(inst, r);
  EXPECT_NEAR(iv.tau_low, 1.0, 1e-12);
  EXPECT_NEAR(iv.tau_up, 1.0, 1e-12);
  EXPECT_TRUE(iv.bounded());
}

TEST(TauInterval, RankDeficientIsUnbounded) {
  const auto inst = random_instance(2, 1, 3, 5);
  const std::vector<double> r{1.0, 1.0};
  EXPECT_FALSE(tau_interval(inst, r).bounded());
}

TEST(TauInterval, MatchesJacobiEigenvalues) {
  const auto inst = random_instance(3, 3, 3, 6);
  const std::vector<double> r{0.9, 1.0, 1.2};
  const auto iv = tau_interval(inst, r);
  for (int k = 0; k < 3; ++k) {
    const auto ev = oracle::jacobi_eigenvalues(inst.h[static_cast<std::size_t>(k)] *
                                               inst.h[static_cast<std::size_t>(k)].adjoint());
    const double scale = 9.0 * r[static_cast<std::size_t>(k)] * r[static_cast<std::size_t>(k)];
    EXPECT_NEAR(iv.device_low[static_cast<std::size_t>(k)], 1.0 / (scale * ev.back()), 1e-10);
    EXPECT_NEAR(iv.device_up[static_cast<std::size_t>(k)], 1.0 / (scale * ev.front()), 1e-8 * iv.device_up[static_cast<std::size_t>(k)]);
  }
}

TEST(TauInterval, RayleighRitzContainment) {
  std::mt19937_64 rng(31);
  for (int inst_id = 0; inst_id < 5; ++inst_id) {
    const auto inst = random_instance(4, 3, 3, 100 + static_cast<std::uint64_t>(inst_id));
    const std::vector<double> r{0.9, 1.0, 1.1, 1.2};
    const auto iv = tau_interval(inst, r);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto m = oracle::random_unit(rng, 3);
      for (int k = 0; k < 4; ++k) {
        const std::vector<CMatrixXd> one{inst.h[static_cast<std::size_t>(k)]};
        // tau_of on a single device uses K = 1; rescale to K = 4.
        const double v = oracle::tau_of(one, {1.0}, {r[static_cast<std::size_t>(k)]}, m) / 16.0;
        EXPECT_GE(v, iv.device_low[static_cast<std::size_t>(k)] - 1e-9);
        EXPECT_LE(v, iv.device_up[static_cast<std::size_t>(k)] + 1e-9);
      }
    }
  }
}

TEST(FeasibilityCheck, TrivialInstance) {
  const MimoInstance inst{{CMatrixXd::Identity(2, 2)}, {1.0}, 1.0};
  const std::vector<double> r{1.0};
  const auto res = feasibility_check(inst, r, 1.0);
  ASSERT_TRUE(res.feasible);
  EXPECT_NEAR(res.m->norm(), 1.0, 1e-12);
  EXPECT_LE(((*res.lifted) - (*res.m) * res.m->adjoint()).norm(), 1e-6);
  EXPECT_NEAR(std::real(res.lifted->trace()), 1.0, 1e-9);
}

TEST(FeasibilityCheck, BelowNecessaryLowIsInfeasible) {
  const auto inst = random_instance(3, 2, 2, 7);
  const std::vector<double> r{1.0, 1.0, 1.0};
  const auto iv = tau_interval(inst, r);
  EXPECT_FALSE(feasibility_check(inst, r, 0.99 * iv.tau_low).feasible);
  EXPECT_FALSE(feasibility_check(inst, r, 0.99 * iv.necessary_low()).feasible);
}

TEST(FeasibilityCheck, AgreesWithAngularGrid) {
  int agree = 0, total = 0;
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> factor(0.8, 1.25);
  for (int s = 0; s < 60; ++s) {
    const int k = 2 + s % 3;
    const auto inst = random_instance(k, 2, 2, 200 + static_cast<std::uint64_t>(s));
    const std::vector<double> r(static_cast<std::size_t>(k), 1.0);
    const double opt = grid_optimum(inst, r);
    const double tau = opt * factor(rng);
    const bool grid_feasible = tau >= opt;
    const auto res = feasibility_check(inst, r, tau);
    if (res.feasible) {
      // A certificate is always genuine.
      EXPECT_LE(beamforming_objective(inst, r, *res.m), tau * (1.0 + 1e-6));
    }
    ++total;
    if (res.feasible == grid_feasible) ++agree;
  }
  EXPECT_GE(agree, static_cast<int>(0.98 * total));
}

TEST(FeasibilityCheck, SuperlevelMonotone) {
  for (int s = 0; s < 30; ++s) {
    const auto inst = random_instance(3, 2, 2, 300 + static_cast<std::uint64_t>(s));
    const std::vector<double> r{1.0, 1.0, 1.0};
    const auto bf = solve_beamforming(inst, r);
    EXPECT_TRUE(feasibility_check(inst, r, bf.tau * 1.001).feasible);
    EXPECT_TRUE(feasibility_check(inst, r, bf.tau * 1.5).feasible);
  }
}

TEST(SolveBeamforming, TrivialInstance) {
  const MimoInstance inst{{CMatrixXd::Identity(2, 2)}, {1.0}, 1.0};
  const std::vector<double> r{1.0};
  const auto bf = solve_beamforming(inst, r);
  EXPECT_NEAR(bf.tau, 1.0, 1e-9);
  EXPECT_NEAR(bf.m.norm(), 1.0, 1e-12);
}

TEST(SolveBeamforming, NearGridOptimum) {
  for (int s = 0; s < 20; ++s) {
    const auto inst = random_instance(2, 2, 2, 400 + static_cast<std::uint64_t>(s));
    const std::vector<double> r{1.0, 1.0};
    const auto bf = solve_beamforming(inst, r);
    const double opt = grid_optimum(inst, r);
    EXPECT_LE(bf.tau, 1.02 * opt);
    EXPECT_NEAR(bf.tau, beamforming_objective(inst, r, bf.m), 1e-12 * bf.tau);
    EXPECT_LE(bf.lower, bf.tau);
  }
}

TEST(SolveDlrGivenM, DegenerateChannel) {
  CMatrixXd h1 = CMatrixXd::Identity(2, 2);
  CMatrixXd h2 = CMatrixXd::Identity(2, 2);
  h2.row(0).setZero();
  const MimoInstance inst{{h1, h2}, {1.0, 1.0}, 1.0};
  EXPECT_THROW(solve_dlr_given_m(inst, CVectorXd::Unit(2, 0), DlrBounds{}), DegenerateChannelError);
}

TEST(SolveDlrGivenM, EqualGainsGiveUnitRatios) {
  const MimoInstance inst{{CMatrixXd::Identity(2, 2), CMatrixXd::Identity(2, 2) * Complex(0, 1)},
                          {1.0, 1.0}, 1.0};
  const CVectorXd m = CVectorXd::Constant(2, 1.0 / std::sqrt(2.0));
  const auto sol = solve_dlr_given_m(inst, m, DlrBounds{});
  EXPECT_NEAR(sol.r[0], 1.0, 1e-9);
  EXPECT_NEAR(sol.r[1], 1.0, 1e-9);
}

TEST(SolveDlrGivenM, DelegatesToMisoSolver) {
  std::mt19937_64 rng(33);
  const auto inst = random_instance(5, 3, 2, 8);
  const auto m = oracle::random_unit(rng, 2);
  const auto a = solve_dlr_given_m(inst, m, DlrBounds{});
  const auto b = solve_dlr_miso(equivalent_instance(inst, m), DlrBounds{});
  EXPECT_EQ(a.r, b.r);
  EXPECT_EQ(a.objective, b.objective);
  // h'_k = (m^H H_k)^T
  const auto eq = equivalent_instance(inst, m);
  EXPECT_LE((eq.h[0] - (m.adjoint() * inst.h[0]).transpose()).norm(), 1e-14);
}

TEST(Theorem3Ordering, PerFixedBeamformer) {
  std::mt19937_64 rng(34);
  for (int s = 0; s < 100; ++s) {
    const auto inst = random_instance(2 + s % 6, 2, 3, 500 + static_cast<std::uint64_t>(s));
    const auto m = oracle::random_unit(rng, 3);
    const auto dlr = solve_dlr_given_m(inst, m, DlrBounds{});
    const auto fixed = fixed_lr_solution(equivalent_instance(inst, m));
    const double lb = mse_lower_bound_mimo(inst, m);
    EXPECT_GE(fixed.mse - dlr.mse, -1e-9);
    EXPECT_GE(dlr.mse - lb, -1e-9);
  }
}

TEST(MseLowerBoundMimo, IdentityChannels) {
  std::mt19937_64 rng(35);
  const MimoInstance inst{{CMatrixXd::Identity(3, 3), CMatrixXd::Identity(3, 3), CMatrixXd::Identity(3, 3)},
                          {1.0, 1.0, 1.0}, 1.0};
  EXPECT_NEAR(mse_lower_bound_mimo(inst, oracle::random_unit(rng, 3)), 1.0 / 9.0, 1e-12);
}

TEST(SolveJoint, SingleDevice) {
  const auto inst = random_instance(1, 2, 2, 9);
  const auto sol = solve_joint(inst, DlrBounds{});
  EXPECT_LE(sol.history.size(), 2u);
  EXPECT_NEAR(sol.dlr.r[0], 1.0, 1e-9);
}

TEST(SolveJoint, MonotoneAndBeatsFixed) {
  for (int s = 0; s < 20; ++s) {
    const int k = 2 + s % 3;
    const auto inst = random_instance(k, 2, 2, 600 + static_cast<std::uint64_t>(s));
    const auto sol = solve_joint(inst, DlrBounds{});
    for (std::size_t i = 1; i < sol.history.size(); ++i)
      EXPECT_LE(sol.history[i], sol.history[i - 1] + 1e-8);
    const std::vector<double> ones(static_cast<std::size_t>(k), 1.0);
    const auto fixed = solve_beamforming(inst, ones);
    EXPECT_LE(sol.mse, fixed.tau * inst.sigma2 + 1e-9);
    EXPECT_GE(sol.mse, mse_lower_bound_mimo(inst, sol.m) - 1e-9);
    EXPECT_NEAR(sol.tau, beamforming_objective(inst, sol.dlr.r, sol.m), 1e-9 * sol.tau);
  }
}

TEST(SolveJoint, MoreRestartsNeverWorse) {
  for (int s = 0; s < 5; ++s) {
    const auto inst = random_instance(4, 3, 3, 700 + static_cast<std::uint64_t>(s));
    JointOptions one, ten;
    ten.restarts = 10;
    const auto a = solve_joint(inst, DlrBounds{}, one);
    const auto b = solve_joint(inst, DlrBounds{}, ten);
    EXPECT_LE(b.tau, a.tau * (1.0 + 1e-12));
  }
}

TEST(TransmitConfig, RespectsPowerAndAlignment) {
  const auto inst = random_instance(4, 3, 2, 10);
  const auto sol = solve_joint(inst, DlrBounds{});
  const auto cfg = transmit_config(inst, sol.m, sol.dlr);
  ChannelSet ch{Scenario::mimo(3, 2), 10, inst.h};
  auto sys = make_system(ch.scenario, 4, 1.0, 1.0);
  EXPECT_NO_THROW(validate_config(sys, cfg));
  const auto gains = effective_gains(ch, cfg);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(std::abs(std::sqrt(cfg.eta) * gains[static_cast<std::size_t>(k)] * 4.0 *
                         sol.dlr.r[static_cast<std::size_t>(k)] - 1.0),
                0.0, 1e-9);
  }
  EXPECT_NEAR(mse(sys, cfg), sol.mse, 1e-9 * sol.mse);
}
