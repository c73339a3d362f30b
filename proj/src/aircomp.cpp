#include "otafl/aircomp.hpp"

#include <cmath>
#include <string>

#include "otafl/errors.hpp"

namespace otafl {

void SystemModel::validate() const {
  require(!power.empty(), "system model needs at least one device");
  for (double p : power) require(p > 0.0 && std::isfinite(p), "device power must be positive");
  require(sigma2 >= 0.0 && std::isfinite(sigma2), "noise power must be >= 0");
  require(a > 0.0 && std::isfinite(a), "retransmission parameter a must be > 0");
}

SystemModel make_system(const Scenario& scenario, int k, double power, double sigma2, double a) {
  require(k >= 1, "make_system: K must be >= 1");
  SystemModel s{scenario, std::vector<double>(static_cast<std::size_t>(k), power), sigma2, a};
  s.validate();
  return s;
}

void validate_config(const SystemModel& system, const TransmitConfig& cfg) {
  system.validate();
  require(cfg.eta > 0.0, "eta must be positive");
  require(cfg.b.size() == system.power.size(), "one transmit coefficient per device required");
  for (std::size_t k = 0; k < cfg.b.size(); ++k) {
    require(cfg.b[k].size() == system.scenario.n_d, "transmit coefficient length must equal N_d");
    if (cfg.b[k].squaredNorm() > system.power[k] + 1e-9) {
      throw ContractViolation("device " + std::to_string(k) + " exceeds its power budget");
    }
  }
  if (system.scenario.has_receive_beamformer()) {
    require(cfg.m.has_value(), "receive beamformer required when N_t > 1");
    require(cfg.m->size() == system.scenario.n_t, "beamformer length must equal N_t");
    require(std::abs(cfg.m->norm() - 1.0) <= 1e-9, "receive beamformer must have unit norm");
  } else {
    require(!cfg.m.has_value() || cfg.m->size() == 1, "single-antenna receiver takes no beamformer");
  }
}

std::vector<Complex> effective_gains(const ChannelSet& channels, const TransmitConfig& cfg) {
  require(static_cast<int>(cfg.b.size()) == channels.size(),
          "effective_gains: one transmit coefficient per device required");
  const int nt = channels.scenario.n_t;
  if (nt > 1) {
    require(cfg.m.has_value() && cfg.m->size() == nt, "effective_gains: beamformer shape mismatch");
  } else {
    require(!cfg.m.has_value() || cfg.m->size() == 1, "effective_gains: unexpected beamformer");
  }
  std::vector<Complex> gains;
  gains.reserve(cfg.b.size());
  for (int k = 0; k < channels.size(); ++k) {
    const auto& h = channels.matrix(k);
    require(cfg.b[static_cast<std::size_t>(k)].size() == h.cols(),
            "effective_gains: transmit coefficient length mismatch");
    const CVectorXd received = h * cfg.b[static_cast<std::size_t>(k)];
    if (cfg.m) gains.push_back(cfg.m->dot(received));  // m^H (H b)
    else gains.push_back(received(0));
  }
  return gains;
}

Complex aggregate(std::span<const Complex> symbols, std::span<const Complex> gains, double eta,
                  Complex noise) {
  require(symbols.size() == gains.size(), "aggregate: length mismatch");
  require(eta > 0.0, "aggregate: eta must be positive");
  Complex sum = noise;
  for (std::size_t k = 0; k < symbols.size(); ++k) sum += gains[k] * symbols[k];
  return std::sqrt(eta) * sum;
}

Complex aggregate_error(std::span<const Complex> symbols, std::span<const Complex> gains,
                        double eta, Complex noise) {
  require(symbols.size() == gains.size() && !symbols.empty(), "aggregate_error: length mismatch");
  require(eta > 0.0, "aggregate_error: eta must be positive");
  const double inv_k = 1.0 / static_cast<double>(symbols.size());
  const double se = std::sqrt(eta);
  Complex e = -se * noise;
  for (std::size_t k = 0; k < symbols.size(); ++k) e += (inv_k - se * gains[k]) * symbols[k];
  return e;
}

Complex channel_error_term(Complex w, std::span<const Complex> grads, double mu,
                           std::span<const double> ratios, double eta,
                           std::span<const Complex> gains) {
  require(grads.size() == ratios.size() && grads.size() == gains.size() && !grads.empty(),
          "channel_error_term: length mismatch");
  const double se = std::sqrt(eta);
  const double inv_k = 1.0 / static_cast<double>(grads.size());
  Complex gain_sum = 0.0;
  Complex e = 0.0;
  for (std::size_t k = 0; k < grads.size(); ++k) {
    gain_sum += gains[k];
    e += (se * gains[k] * (ratios[k] * mu) - mu * inv_k) * grads[k];
  }
  return (1.0 - se * gain_sum) * w + e;
}

double mse(const SystemModel& system, const TransmitConfig& cfg) {
  require(cfg.eta > 0.0, "mse: eta must be positive");
  const double m2 = cfg.m ? cfg.m->squaredNorm() : 1.0;
  return system.sigma2 * m2 * cfg.eta;
}

double retransmission_probability(double e_sq, double p_des, double a) {
  require(e_sq >= 0.0, "retransmission_probability: e_sq must be >= 0");
  require(p_des > 0.0, "retransmission_probability: p_des must be > 0");
  require(a > 0.0, "retransmission_probability: a must be > 0");
  return -std::expm1(-a * e_sq / p_des);
}

CVectorXd aggregate_block(const std::vector<CVectorXd>& symbols, std::span<const Complex> gains,
                          double eta, const CVectorXd& noise) {
  require(symbols.size() == gains.size() && !symbols.empty(), "aggregate_block: length mismatch");
  require(eta > 0.0, "aggregate_block: eta must be positive");
  CVectorXd sum = noise;
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    require(symbols[k].size() == noise.size(), "aggregate_block: block size mismatch");
    sum += gains[k] * symbols[k];
  }
  return std::sqrt(eta) * sum;
}

}  // namespace otafl
