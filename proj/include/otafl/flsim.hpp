#pragma once

// Federated learning over an AirComp uplink. Each round every device takes
// one full-batch gradient step with its own learning rate r_k mu, the local
// models are sent as complex symbols through the fading channel, and the
// receiver decodes the aggregate as the next global model.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "otafl/aircomp.hpp"
#include "otafl/channel.hpp"
#include "otafl/dlr_miso.hpp"
#include "otafl/numkit.hpp"
#include "otafl/rng.hpp"

namespace otafl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Architecture { Logistic, Mlp };

std::string to_string(Architecture arch);
Architecture parse_architecture(const std::string& text);

/// Softmax regression, or one sigmoid hidden layer followed by softmax.
/// Flat layout: logistic = [W (C x d, row-major), b (C)];
/// MLP = [W1 (H x d), b1 (H), W2 (C x H), b2 (C)].
struct Model {
  Architecture arch = Architecture::Logistic;
  int dims = 0;
  int classes = 2;
  int hidden = 0;
  VectorXd params;

  static Model logistic(int dims, int classes);
  static Model mlp(int dims, int classes, int hidden = 64);

  Eigen::Index size() const { return params.size(); }
  Eigen::Index expected_size() const;
  void validate() const;
};

// Logistic models start at zero; MLP weights are N(0, 1/fan_in).
Model init_model(Architecture arch, int dims, int classes, int hidden, std::uint64_t seed);

struct Dataset {
  MatrixXd features;        // samples x dims
  std::vector<int> labels;  // in [0, classes)
  int classes = 2;

  Eigen::Index samples() const { return features.rows(); }
  int dims() const { return static_cast<int>(features.cols()); }
  void validate() const;
  Dataset subset(std::span<const int> indices) const;
};

struct Task {
  Dataset train;
  Dataset test;
};

/// Disjoint shuffled partitions of equal size; floor(n / K) samples each,
/// leftovers unused.
std::vector<std::vector<int>> partition_equal(Eigen::Index samples, int k, std::uint64_t seed);

/// Mean cross-entropy over the selected rows (all rows when `rows` is empty).
double loss(const Model& model, const Dataset& data, std::span<const int> rows = {});
/// Gradient of `loss` with respect to the flat parameters.
VectorXd gradient(const Model& model, const Dataset& data, std::span<const int> rows = {});
double accuracy(const Model& model, const Dataset& data);

/// w_k = w - mu_k g_k
VectorXd local_update(const VectorXd& w, const VectorXd& grad, double mu_k);

/// Affine map taking a real parameter vector to complex symbols. Two
/// consecutive reals form one symbol (re, im); odd lengths get a zero pad.
struct SymbolNormalization {
  Complex mean{0.0, 0.0};
  double scale = 1.0;  // 1 when the symbols have zero variance
  bool pad = false;
  Eigen::Index length = 0;  // real parameters
};

struct EncodedModel {
  CVectorXd symbols;
  SymbolNormalization norm;
};

CVectorXd pack_symbols(const VectorXd& w);
/// Zero-mean, unit-variance symbols for a single vector.
EncodedModel encode_symbols(const VectorXd& w);
/// Shared normalization pooled over several vectors of equal length.
SymbolNormalization pooled_normalization(std::span<const VectorXd> models);
CVectorXd encode_with(const VectorXd& w, const SymbolNormalization& norm);
VectorXd decode(const CVectorXd& symbols, const SymbolNormalization& norm);

struct AggregationResult {
  VectorXd global;
  double e_sq = 0.0;       // sum over symbols of |y - y_target|^2, last attempt
  int retransmissions = 0;
  bool retx_exhausted = false;
};

inline constexpr int kDefaultMaxRetx = 5;

/// One uplink round. y_target = sum_k s_k / (K r_k) is what the receiver
/// would decode without noise; each retransmission redraws the noise only.
AggregationResult air_aggregate_round(std::span<const VectorXd> local_models,
                                      const ChannelSet& channels, const TransmitConfig& cfg,
                                      std::span<const double> ratios, const SystemModel& system,
                                      Rng& rng, int max_retx = kDefaultMaxRetx);

enum class LrPolicy { Fixed, Dlr };
enum class BeamformerPolicy { Optimized, ClosedForm };

std::string to_string(LrPolicy policy);
LrPolicy parse_lr_policy(const std::string& text);

struct TrainConfig {
  double mu = 0.01;
  int epochs = 20;  // one epoch = one aggregation round over full local data
  DlrBounds bounds;
  std::uint64_t seed = 0;
  SystemModel system;
  LrPolicy policy = LrPolicy::Dlr;
  BeamformerPolicy beamformer = BeamformerPolicy::Optimized;
  Architecture arch = Architecture::Logistic;
  int hidden = 64;
  int max_retx = kDefaultMaxRetx;

  void validate() const;
};

struct RoundLog {
  int round = 0;
  double loss = 0.0;      // training loss after the round
  double acc = 0.0;       // test accuracy after the round
  double e_sq = 0.0;
  int retx = 0;
  bool retx_exhausted = false;
};

using RoundObserver = std::function<void(int round, const Model& model)>;

/// Per round: fresh channels, solver, local steps, uplink, evaluation.
/// Deterministic under config.seed; InfeasibleError from a solver aborts.
std::vector<RoundLog> train_federated(const Task& task, const TrainConfig& config, int k,
                                      const RoundObserver& observer = {});

/// Reference gradient descent with the device-averaged gradient.
std::vector<RoundLog> train_centralized(const Task& task, const TrainConfig& config, int k,
                                        const RoundObserver& observer = {});

// CSV columns: round,loss,acc,e_sq,retx
void write_round_logs_csv(std::ostream& out, std::span<const RoundLog> logs);

/// Two unit-covariance Gaussian blobs at +-(1.5, 1.5); 2000 train, 500 test,
/// both exactly balanced and shuffled.
Task synthetic_task(std::uint64_t seed);

class MnistParseError : public std::runtime_error {
 public:
  enum class Kind { Io, MagicMismatch, Truncated, CountMismatch, LabelRange };
  MnistParseError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// IDX image/label pair; pixels scaled to [0, 1].
Dataset load_mnist_idx(const std::filesystem::path& image_path,
                       const std::filesystem::path& label_path);

/// Random subset holding round(fraction * n) samples (at least one).
Dataset subsample(const Dataset& data, double fraction, std::uint64_t seed);

}  // namespace otafl
