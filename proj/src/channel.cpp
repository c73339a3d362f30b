#include "otafl/channel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "otafl/errors.hpp"
#include "otafl/rng.hpp"

namespace otafl {

std::string to_string(ScenarioTag tag) {
  switch (tag) {
    case ScenarioTag::SISO: return "SISO";
    case ScenarioTag::MISO: return "MISO";
    case ScenarioTag::SIMO: return "SIMO";
    case ScenarioTag::MIMO: return "MIMO";
  }
  return "?";
}

ScenarioTag parse_scenario_tag(const std::string& text) {
  std::string up;
  for (char c : text) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "SISO") return ScenarioTag::SISO;
  if (up == "MISO") return ScenarioTag::MISO;
  if (up == "SIMO") return ScenarioTag::SIMO;
  if (up == "MIMO") return ScenarioTag::MIMO;
  throw ContractViolation("unknown scenario '" + text + "'");
}

Scenario Scenario::miso(int n_d) { return make(ScenarioTag::MISO, n_d, 1); }
Scenario Scenario::simo(int n_t) { return make(ScenarioTag::SIMO, 1, n_t); }
Scenario Scenario::mimo(int n_d, int n_t) { return make(ScenarioTag::MIMO, n_d, n_t); }

Scenario Scenario::make(ScenarioTag tag, int n_d, int n_t) {
  require(n_d >= 1 && n_t >= 1, "antenna counts must be >= 1");
  switch (tag) {
    case ScenarioTag::SISO: require(n_d == 1 && n_t == 1, "SISO requires N_d = N_t = 1"); break;
    case ScenarioTag::MISO: require(n_t == 1, "MISO requires N_t = 1"); break;
    case ScenarioTag::SIMO: require(n_d == 1, "SIMO requires N_d = 1"); break;
    case ScenarioTag::MIMO: break;
  }
  return Scenario{tag, n_d, n_t};
}

bool operator==(const Scenario& a, const Scenario& b) {
  return a.tag == b.tag && a.n_d == b.n_d && a.n_t == b.n_t;
}

CVectorXd ChannelSet::transmit_vector(int k) const {
  const auto& m = matrix(k);
  require(m.rows() == 1, "transmit_vector needs a single receive antenna");
  return m.row(0).transpose();
}

CVectorXd ChannelSet::receive_vector(int k) const {
  const auto& m = matrix(k);
  require(m.cols() == 1, "receive_vector needs a single transmit antenna");
  return m.col(0);
}

ChannelSet draw_channels(const Scenario& scenario, int k, std::uint64_t seed) {
  require(k >= 1, "draw_channels: K must be >= 1");
  const Scenario checked = Scenario::make(scenario.tag, scenario.n_d, scenario.n_t);
  ChannelSet out{checked, seed, {}};
  out.h.reserve(static_cast<std::size_t>(k));
  const double sd = std::sqrt(0.5);
  for (int dev = 0; dev < k; ++dev) {
    Rng rng = make_rng(seed, {0xC4A77E1ULL, static_cast<std::uint64_t>(dev)});
    std::normal_distribution<double> normal(0.0, sd);
    CMatrixXd m(checked.n_t, checked.n_d);
    for (int r = 0; r < checked.n_t; ++r) {
      for (int c = 0; c < checked.n_d; ++c) {
        const double re = normal(rng);
        const double im = normal(rng);
        m(r, c) = Complex(re, im);
      }
    }
    out.h.push_back(std::move(m));
  }
  return out;
}

void write_channels_csv(std::ostream& out, const ChannelSet& channels) {
  out << "device,row,col,re,im\n";
  char buf[128];
  for (int k = 0; k < channels.size(); ++k) {
    const auto& m = channels.matrix(k);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%d,%ld,%ld,%.17g,%.17g\n", k, static_cast<long>(r),
                      static_cast<long>(c), m(r, c).real(), m(r, c).imag());
        out << buf;
      }
    }
  }
}

ChannelSet read_channels_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("device,row,col,re,im", 0) != 0) {
    throw ContractViolation("channel CSV: missing header 'device,row,col,re,im'");
  }
  std::map<std::tuple<int, int, int>, Complex> entries;
  int devices = 0, rows = 0, cols = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field[5];
    for (auto& f : field) {
      if (!std::getline(ss, f, ',')) {
        throw ContractViolation("channel CSV: short row at line " + std::to_string(lineno));
      }
    }
    const int d = std::stoi(field[0]), r = std::stoi(field[1]), c = std::stoi(field[2]);
    require(d >= 0 && r >= 0 && c >= 0, "channel CSV: negative index");
    const Complex v(std::stod(field[3]), std::stod(field[4]));
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), "channel CSV: non-finite entry");
    entries[{d, r, c}] = v;
    devices = std::max(devices, d + 1);
    rows = std::max(rows, r + 1);
    cols = std::max(cols, c + 1);
  }
  require(devices > 0, "channel CSV: no entries");
  require(entries.size() == static_cast<std::size_t>(devices) * rows * cols,
          "channel CSV: incomplete channel matrices");
  ScenarioTag tag = ScenarioTag::MIMO;
  if (rows == 1 && cols == 1) tag = ScenarioTag::SISO;
  else if (rows == 1) tag = ScenarioTag::MISO;
  else if (cols == 1) tag = ScenarioTag::SIMO;
  ChannelSet out{Scenario::make(tag, cols, rows), 0, {}};
  for (int d = 0; d < devices; ++d) {
    CMatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = entries.at({d, r, c});
    out.h.push_back(std::move(m));
  }
  return out;
}

}  // namespace otafl
