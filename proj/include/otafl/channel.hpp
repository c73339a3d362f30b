#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "otafl/numkit.hpp"

namespace otafl {

enum class ScenarioTag { SISO, MISO, SIMO, MIMO };

std::string to_string(ScenarioTag tag);
ScenarioTag parse_scenario_tag(const std::string& text);

/// Antenna configuration. SISO fixes both counts to 1, MISO fixes the
/// receiver to one antenna and SIMO fixes each device to one antenna.
struct Scenario {
  ScenarioTag tag = ScenarioTag::SISO;
  int n_d = 1;  // transmit antennas per device
  int n_t = 1;  // receive antennas at the aggregator

  static Scenario siso() { return {ScenarioTag::SISO, 1, 1}; }
  static Scenario miso(int n_d);
  static Scenario simo(int n_t);
  static Scenario mimo(int n_d, int n_t);
  // Validates the tag/antenna combination.
  static Scenario make(ScenarioTag tag, int n_d, int n_t);

  bool has_receive_beamformer() const { return n_t > 1; }
};

bool operator==(const Scenario& a, const Scenario& b);

/// One block-fading realization for K devices. Every channel is stored as an
/// N_t x N_d matrix; the scalar (SISO) and vector (MISO/SIMO) cases are the
/// degenerate shapes 1x1, 1xN_d and N_tx1.
struct ChannelSet {
  Scenario scenario;
  std::uint64_t seed = 0;
  std::vector<CMatrixXd> h;

  int size() const { return static_cast<int>(h.size()); }
  const CMatrixXd& matrix(int k) const { return h.at(static_cast<std::size_t>(k)); }
  // MISO: h_k as a length-N_d vector with A_k = h_k^T b_k.
  CVectorXd transmit_vector(int k) const;
  // SIMO: h_k as a length-N_t column.
  CVectorXd receive_vector(int k) const;
};

/// i.i.d. CN(0, 1) entries; device k uses its own stream so growing K leaves
/// the first devices' channels unchanged.
ChannelSet draw_channels(const Scenario& scenario, int k, std::uint64_t seed);

// CSV fixture format: header `device,row,col,re,im`, one row per entry.
void write_channels_csv(std::ostream& out, const ChannelSet& channels);
ChannelSet read_channels_csv(std::istream& in);

}  // namespace otafl
