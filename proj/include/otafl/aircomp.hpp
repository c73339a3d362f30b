#pragma once

// Over-the-air aggregation model: the receiver observes
//   y = sqrt(eta) * (sum_k A_k s_k + B)
// and wants y_des = (1/K) sum_k s_k.

#include <optional>
#include <span>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/numkit.hpp"

namespace otafl {

struct SystemModel {
  Scenario scenario;
  std::vector<double> power;  // P_k, linear
  double sigma2 = 1.0;        // noise power, linear
  double a = 10.0;            // retransmission modulation parameter

  int devices() const { return static_cast<int>(power.size()); }
  void validate() const;
};

// Equal per-device power budget.
SystemModel make_system(const Scenario& scenario, int k, double power, double sigma2,
                        double a = 10.0);

struct TransmitConfig {
  std::vector<CVectorXd> b;     // length N_d per device
  std::optional<CVectorXd> m;   // receive beamformer, present iff N_t > 1
  double eta = 1.0;
};

// Power budgets and the unit-norm receive beamformer.
void validate_config(const SystemModel& system, const TransmitConfig& cfg);

/// A_k = m^H H_k b_k (with m = 1 for a single receive antenna).
std::vector<Complex> effective_gains(const ChannelSet& channels, const TransmitConfig& cfg);

Complex aggregate(std::span<const Complex> symbols, std::span<const Complex> gains, double eta,
                  Complex noise);

/// e = y_des - y.
Complex aggregate_error(std::span<const Complex> symbols, std::span<const Complex> gains,
                        double eta, Complex noise);

/// Part of the error caused by fading when device k steps with mu_k = r_k mu:
///   (1 - sqrt(eta) sum A_k) w + sum_k (sqrt(eta) A_k mu_k - mu/K) g_k
Complex channel_error_term(Complex w, std::span<const Complex> grads, double mu,
                           std::span<const double> ratios, double eta,
                           std::span<const Complex> gains);

/// eta * E|B|^2; sigma^2 eta for one receive antenna, sigma^2 ||m||^2 eta otherwise.
double mse(const SystemModel& system, const TransmitConfig& cfg);

/// 1 - exp(-a e_sq / p_des).
double retransmission_probability(double e_sq, double p_des, double a);

// Vectorised aggregation over a block of symbols: symbols[k] is device k's
// block and noise holds B for each symbol slot.
CVectorXd aggregate_block(const std::vector<CVectorXd>& symbols, std::span<const Complex> gains,
                          double eta, const CVectorXd& noise);

}  // namespace otafl
