#include "otafl/asymptotic.hpp"

#include <cmath>

#include "otafl/errors.hpp"

namespace otafl {

std::string to_string(AsymptoticRegime regime) {
  switch (regime) {
    case AsymptoticRegime::MisoNd: return "MISO-Nd";
    case AsymptoticRegime::SimoNt: return "SIMO-Nt";
    case AsymptoticRegime::MimoNd: return "MIMO-Nd";
    case AsymptoticRegime::MimoNt: return "MIMO-Nt";
  }
  return "?";
}

AsymptoticRegime parse_regime(const std::string& text) {
  if (text == "MISO-Nd") return AsymptoticRegime::MisoNd;
  if (text == "SIMO-Nt") return AsymptoticRegime::SimoNt;
  if (text == "MIMO-Nd") return AsymptoticRegime::MimoNd;
  if (text == "MIMO-Nt") return AsymptoticRegime::MimoNt;
  throw ContractViolation("unknown asymptotic regime '" + text + "'");
}

AsymptoticRegime regime_for(const Scenario& scenario) {
  switch (scenario.tag) {
    case ScenarioTag::SISO:
    case ScenarioTag::MISO: return AsymptoticRegime::MisoNd;
    case ScenarioTag::SIMO: return AsymptoticRegime::SimoNt;
    case ScenarioTag::MIMO:
      return scenario.n_d > scenario.n_t ? AsymptoticRegime::MimoNd : AsymptoticRegime::MimoNt;
  }
  return AsymptoticRegime::MisoNd;
}

CVectorXd closed_form_beamformer(const ChannelSet& channels) {
  require(channels.scenario.n_t > 1, "closed_form_beamformer needs N_t > 1");
  require(channels.size() >= 1, "closed_form_beamformer needs at least one device");
  CVectorXd sum = CVectorXd::Zero(channels.scenario.n_t);
  for (int k = 0; k < channels.size(); ++k) {
    const auto& h = channels.matrix(k);
    const double norm = h.norm();
    if (!(norm > 0.0)) throw DegenerateChannelError("closed_form_beamformer: zero channel");
    if (h.cols() == 1) {
      sum += h.col(0) / norm;
    } else {
      sum += principal_eigenvector(h * h.adjoint());
    }
  }
  const double norm = sum.norm();
  if (!(norm > 1e-12 * channels.size())) {
    throw ContractViolation("closed_form_beamformer: per-device directions cancel out");
  }
  return sum / norm;
}

AsymptoticPrediction theoretical_mse(AsymptoticRegime regime, int k, double power, double sigma2,
                                     int n_d, int n_t) {
  require(k >= 1 && power > 0.0 && sigma2 > 0.0 && n_d >= 1 && n_t >= 1,
          "theoretical_mse: parameters must be positive");
  AsymptoticPrediction out;
  out.regime = regime;
  const double kd = static_cast<double>(k);
  switch (regime) {
    case AsymptoticRegime::MisoNd:
      require(n_t == 1, "MISO regime requires N_t = 1");
      out.mse = sigma2 / (power * kd * kd * n_d);
      break;
    case AsymptoticRegime::MimoNd:
      require(n_d > n_t, "MIMO-Nd regime requires N_d > N_t");
      out.mse = sigma2 / (power * kd * kd * n_d);
      break;
    case AsymptoticRegime::SimoNt:
      require(n_d == 1, "SIMO regime requires N_d = 1");
      out.mse = sigma2 / (power * kd * n_t);
      break;
    case AsymptoticRegime::MimoNt:
      require(n_t > n_d, "MIMO-Nt regime requires N_t > N_d");
      out.mse = sigma2 / (power * kd * n_t);
      break;
  }
  return out;
}

}  // namespace otafl
