#pragma once

// Large-antenna limits and the closed-form receive beamformers they suggest.

#include <string>

#include "otafl/channel.hpp"
#include "otafl/numkit.hpp"

namespace otafl {

enum class AsymptoticRegime {
  MisoNd,  // N_d -> inf, single receive antenna
  SimoNt,  // N_t -> inf, single transmit antenna
  MimoNd,  // N_d -> inf with N_d > N_t
  MimoNt,  // N_t -> inf with N_t > N_d
};

std::string to_string(AsymptoticRegime regime);
AsymptoticRegime parse_regime(const std::string& text);

struct AsymptoticPrediction {
  double mse = 0.0;
  double r_limit = 1.0;
  AsymptoticRegime regime = AsymptoticRegime::MisoNd;
};

/// SIMO: normalized sum of h_k / ||h_k||.
/// MIMO: normalized sum of the principal eigenvectors of H_k H_k^H.
/// Throws ContractViolation for single-antenna receivers, zero channels, or
/// when the summed directions cancel.
CVectorXd closed_form_beamformer(const ChannelSet& channels);

/// MISO / MIMO-N_d: sigma^2 / (P K^2 N_d); SIMO / MIMO-N_t: sigma^2 / (P K N_t).
AsymptoticPrediction theoretical_mse(AsymptoticRegime regime, int k, double power, double sigma2,
                                     int n_d, int n_t);

// Regime implied by an antenna configuration (the larger side grows).
AsymptoticRegime regime_for(const Scenario& scenario);

}  // namespace otafl
