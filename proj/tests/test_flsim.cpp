#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "otafl/flsim.hpp"
#include "otafl/mimo_solver.hpp"

using namespace otafl;
namespace fs = std::filesystem;

namespace {

Dataset small_dataset(std::uint64_t seed, int n, int dims, int classes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset d;
  d.classes = classes;
  d.features = MatrixXd(n, dims);
  for (int i = 0; i < n; ++i) {
    d.labels.push_back(i % classes);
    for (int j = 0; j < dims; ++j) d.features(i, j) = g(rng) + 0.5 * (i % classes);
  }
  return d;
}

double max_relative_error(const VectorXd& a, const VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-8, b.cwiseAbs().maxCoeff());
}

// Theorem-1-satisfying MISO design for the given draw.
struct Design {
  ChannelSet channels;
  SystemModel system;
  DlrSolution dlr;
  TransmitConfig cfg;
};

Design miso_design(int k, int nd, double sigma2, std::uint64_t seed) {
  Design d;
  d.channels = draw_channels(Scenario::make(nd == 1 ? ScenarioTag::SISO : ScenarioTag::MISO, nd, 1), k, seed);
  d.system = make_system(d.channels.scenario, k, 1.0, sigma2);
  d.dlr = solve_dlr_miso(MisoInstance::from_channels(d.channels, d.system), DlrBounds{});
  d.cfg.b = d.dlr.b;
  d.cfg.eta = d.dlr.eta;
  return d;
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_images(const fs::path& p, std::uint32_t magic, std::uint32_t count, std::uint32_t stored) {
  std::ofstream out(p, std::ios::binary);
  write_be32(out, magic);
  write_be32(out, count);
  write_be32(out, 28);
  write_be32(out, 28);
  std::vector<char> pix(28 * 28 * stored, 7);
  out.write(pix.data(), static_cast<std::streamsize>(pix.size()));
}

void write_labels(const fs::path& p, std::uint32_t magic, std::uint32_t count, unsigned char label = 3) {
  std::ofstream out(p, std::ios::binary);
  write_be32(out, magic);
  write_be32(out, count);
  std::vector<char> lab(count, static_cast<char>(label));
  out.write(lab.data(), static_cast<std::streamsize>(lab.size()));
}

MnistParseError::Kind parse_kind(const fs::path& img, const fs::path& lab) {
  try {
    load_mnist_idx(img, lab);
  } catch (const MnistParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no parse error";
  return MnistParseError::Kind::Io;
}

}  // namespace

TEST(LocalUpdate, Examples) {
  const VectorXd w = VectorXd::LinSpaced(4, 0.0, 3.0);
  EXPECT_EQ(local_update(w, VectorXd::Ones(4), 0.0), w);
  const VectorXd step = local_update(VectorXd::Zero(3), VectorXd::Ones(3), 0.01);
  EXPECT_NEAR((step + 0.01 * VectorXd::Ones(3)).norm(), 0.0, 1e-16);
}

TEST(Model, LayoutSizes) {
  EXPECT_EQ(Model::logistic(5, 3).expected_size(), 3 * 5 + 3);
  EXPECT_EQ(Model::mlp(5, 3, 7).expected_size(), 7 * 5 + 7 + 3 * 7 + 3);
  const auto m = init_model(Architecture::Mlp, 4, 2, 8, 1);
  EXPECT_EQ(m.size(), m.expected_size());
  EXPECT_EQ(init_model(Architecture::Logistic, 4, 2, 0, 1).params.norm(), 0.0);
  EXPECT_EQ(parse_architecture(to_string(Architecture::Mlp)), Architecture::Mlp);
}

TEST(Gradient, FiniteDifferencesLogistic) {
  const auto data = small_dataset(1, 40, 5, 3);
  Model m = Model::logistic(5, 3);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 0.5);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.params(i) = g(rng);
  const auto f = [&](const VectorXd& p) {
    Model t = m;
    t.params = p;
    return loss(t, data);
  };
  const VectorXd num = oracle::central_difference(f, m.params, 1e-5);
  EXPECT_LE(max_relative_error(gradient(m, data), num), 1e-4);
}

TEST(Gradient, FiniteDifferencesMlp) {
  const auto data = small_dataset(3, 30, 4, 3);
  const Model m = init_model(Architecture::Mlp, 4, 3, 6, 4);
  const auto f = [&](const VectorXd& p) {
    Model t = m;
    t.params = p;
    return loss(t, data);
  };
  const VectorXd num = oracle::central_difference(f, m.params, 1e-5);
  EXPECT_LE(max_relative_error(gradient(m, data), num), 1e-4);
}

TEST(Gradient, ZeroWeightBalancedBatchHasZeroBiasGradient) {
  const auto data = small_dataset(5, 40, 3, 2);
  const Model m = Model::logistic(3, 2);
  const VectorXd grad = gradient(m, data);
  EXPECT_NEAR(grad.tail(2).norm(), 0.0, 1e-15);
}

TEST(Gradient, DuplicatedBatchIsIdentical) {
  const auto data = small_dataset(6, 20, 3, 2);
  Dataset twice = data;
  twice.features = MatrixXd(40, 3);
  twice.features << data.features, data.features;
  twice.labels.insert(twice.labels.end(), data.labels.begin(), data.labels.end());
  const Model m = init_model(Architecture::Mlp, 3, 2, 5, 1);
  EXPECT_NEAR((gradient(m, data) - gradient(m, twice)).norm(), 0.0, 1e-14);
}

TEST(Gradient, RowSubsetMatchesSubsetDataset) {
  const auto data = small_dataset(7, 30, 3, 2);
  const std::vector<int> rows{1, 4, 9, 20};
  const Model m = init_model(Architecture::Mlp, 3, 2, 5, 2);
  EXPECT_NEAR((gradient(m, data, rows) - gradient(m, data.subset(rows))).norm(), 0.0, 1e-14);
}

TEST(Encoding, RoundTripAndStatistics) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(3.0, 2.0);
  VectorXd w(11);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = g(rng);
  const auto enc = encode_symbols(w);
  EXPECT_EQ(enc.symbols.size(), 6);
  EXPECT_LE((decode(enc.symbols, enc.norm) - w).norm(), 1e-12 * w.norm());
  const auto even = encode_symbols(w.head(10));
  EXPECT_LE(std::abs(even.symbols.mean()), 1e-12);
  EXPECT_NEAR(even.symbols.squaredNorm() / 5.0, 1.0, 1e-12);
}

TEST(Encoding, OddLengthPads) {
  const VectorXd w = (VectorXd(3) << 1.0, -2.0, 0.5).finished();
  EXPECT_EQ(pack_symbols(w).size(), 2);
  const auto enc = encode_symbols(w);
  EXPECT_TRUE(enc.norm.pad);
  const VectorXd back = decode(enc.symbols, enc.norm);
  ASSERT_EQ(back.size(), 3);
  EXPECT_NEAR((back - w).norm(), 0.0, 1e-14);
}

TEST(Encoding, ConstantVectorKeepsUnitScale) {
  const auto enc = encode_symbols(VectorXd::Constant(6, 2.5));
  EXPECT_EQ(enc.norm.scale, 1.0);
  EXPECT_NEAR((decode(enc.symbols, enc.norm) - VectorXd::Constant(6, 2.5)).norm(), 0.0, 1e-15);
}

TEST(AirAggregate, NoiselessDlrEqualsCentralizedStep) {
  const auto d = miso_design(6, 3, 0.0, 11);
  const VectorXd w = VectorXd::LinSpaced(9, -1.0, 1.0);
  std::mt19937_64 grng(12);
  std::normal_distribution<double> g(0.0, 1.0);
  const double mu = 0.05;
  std::vector<VectorXd> local;
  VectorXd avg_grad = VectorXd::Zero(9);
  for (int k = 0; k < 6; ++k) {
    VectorXd grad(9);
    for (Eigen::Index i = 0; i < 9; ++i) grad(i) = g(grng);
    avg_grad += grad / 6.0;
    local.push_back(local_update(w, grad, d.dlr.r[static_cast<std::size_t>(k)] * mu));
  }
  Rng rng(1);
  const auto res = air_aggregate_round(local, d.channels, d.cfg, d.dlr.r, d.system, rng);
  const VectorXd central = w - mu * avg_grad;
  EXPECT_LE((res.global - central).norm(), 1e-6 * central.norm());
  EXPECT_EQ(res.retransmissions, 0);
}

TEST(AirAggregate, SingleDeviceIdentity) {
  const ChannelSet ch{Scenario::siso(), 0, {CMatrixXd::Constant(1, 1, 1.0)}};
  const auto sys = make_system(ch.scenario, 1, 1.0, 0.0);
  TransmitConfig cfg;
  cfg.b = {CVectorXd::Constant(1, 1.0)};
  const std::vector<VectorXd> local{VectorXd::LinSpaced(5, 1.0, 5.0)};
  const std::vector<double> r{1.0};
  Rng rng(2);
  const auto res = air_aggregate_round(local, ch, cfg, r, sys, rng);
  EXPECT_NEAR((res.global - local[0]).norm(), 0.0, 1e-13);
}

TEST(AirAggregate, ErrorEnergyMatchesMse) {
  for (int nt : {1, 3}) {
    Design d;
    if (nt == 1) {
      d = miso_design(4, 2, 0.5, 13);
    } else {
      d.channels = draw_channels(Scenario::mimo(2, 3), 4, 13);
      d.system = make_system(d.channels.scenario, 4, 1.0, 0.5);
      const auto inst = MimoInstance::from_channels(d.channels, d.system);
      const auto sol = solve_joint(inst, DlrBounds{});
      d.dlr = sol.dlr;
      d.cfg = transmit_config(inst, sol.m, sol.dlr);
    }
    std::vector<VectorXd> local;
    for (int k = 0; k < 4; ++k) local.push_back(VectorXd::LinSpaced(20, k, 2.0 * k + 1));
    Rng rng(14);
    double acc = 0.0;
    const int reps = 1000;
    for (int i = 0; i < reps; ++i)
      acc += air_aggregate_round(local, d.channels, d.cfg, d.dlr.r, d.system, rng, 0).e_sq;
    const double expected = mse(d.system, d.cfg) * 10.0;
    EXPECT_NEAR(acc / reps, expected, 0.10 * expected) << "N_t = " << nt;
  }
}

TEST(AirAggregate, RetransmissionCap) {
  const auto d = miso_design(3, 1, 1e6, 15);
  std::vector<VectorXd> local(3, VectorXd::LinSpaced(8, 0.0, 1.0));
  local[1](0) = 5.0;
  Rng rng(16);
  const auto res = air_aggregate_round(local, d.channels, d.cfg, d.dlr.r, d.system, rng, 2);
  EXPECT_EQ(res.retransmissions, 2);
  EXPECT_TRUE(res.retx_exhausted);
}

TEST(Partition, DisjointEqual) {
  const auto parts = partition_equal(103, 10, 1);
  ASSERT_EQ(parts.size(), 10u);
  std::vector<int> seen(103, 0);
  for (const auto& p : parts) {
    EXPECT_EQ(p.size(), 10u);
    for (int i : p) ++seen[static_cast<std::size_t>(i)];
  }
  EXPECT_EQ(std::accumulate(seen.begin(), seen.end(), 0), 100);
  for (int s : seen) EXPECT_LE(s, 1);
}

TEST(SyntheticTask, BalancedDeterministicSeparable) {
  const auto t = synthetic_task(3);
  EXPECT_EQ(t.train.samples(), 2000);
  EXPECT_EQ(t.test.samples(), 500);
  EXPECT_EQ(std::count(t.train.labels.begin(), t.train.labels.end(), 1), 1000);
  EXPECT_EQ(std::count(t.test.labels.begin(), t.test.labels.end(), 1), 250);
  const auto u = synthetic_task(3);
  EXPECT_EQ(t.train.features, u.train.features);
  EXPECT_EQ(t.train.labels, u.train.labels);
  // Bayes discriminant for symmetric unit-covariance blobs: sign of x1 + x2.
  int correct = 0;
  for (Eigen::Index i = 0; i < t.test.samples(); ++i) {
    const int pred = t.test.features.row(i).sum() > 0.0 ? 1 : 0;
    const int truth = t.test.labels[static_cast<std::size_t>(i)];
    // Either orientation of the class centres is allowed.
    correct += pred == truth;
  }
  const double acc = std::max(correct, static_cast<int>(t.test.samples()) - correct) /
                     static_cast<double>(t.test.samples());
  EXPECT_GE(acc, 0.95);
}

TEST(Training, NoiselessMatchesCentralized) {
  const auto task = synthetic_task(1);
  for (auto arch : {Architecture::Logistic, Architecture::Mlp}) {
    for (auto sc : {Scenario::siso(), Scenario::miso(4), Scenario::mimo(2, 2)}) {
      TrainConfig cfg;
      cfg.seed = 3;
      cfg.arch = arch;
      cfg.epochs = 10;
      cfg.system = make_system(sc, 10, 1.0, 0.0);
      std::vector<VectorXd> a, b;
      const auto la = train_federated(task, cfg, 10, [&](int, const Model& m) { a.push_back(m.params); });
      const auto lb = train_centralized(task, cfg, 10, [&](int, const Model& m) { b.push_back(m.params); });
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE((a[i] - b[i]).norm(), 1e-5);
      for (std::size_t i = 0; i < la.size(); ++i) EXPECT_NEAR(la[i].loss, lb[i].loss, 1e-5);
    }
  }
}

TEST(Training, Deterministic) {
  const auto task = synthetic_task(2);
  TrainConfig cfg;
  cfg.seed = 9;
  cfg.epochs = 5;
  cfg.system = make_system(Scenario::miso(2), 5, 1.0, 1.0);
  const auto a = train_federated(task, cfg, 5);
  const auto b = train_federated(task, cfg, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].loss, b[i].loss);
    EXPECT_EQ(a[i].e_sq, b[i].e_sq);
    EXPECT_EQ(a[i].retx, b[i].retx);
  }
}

TEST(Training, NoisyMisoReachesHighAccuracy) {
  const auto task = synthetic_task(1);
  for (auto policy : {LrPolicy::Fixed, LrPolicy::Dlr}) {
    double acc = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      TrainConfig cfg;
      cfg.seed = seed;
      cfg.policy = policy;
      cfg.epochs = 50;
      cfg.system = make_system(Scenario::miso(4), 10, 1.0, 1.0);
      acc += train_federated(task, cfg, 10).back().acc / 5.0;
    }
    EXPECT_GE(acc, 0.9) << to_string(policy);
  }
}

TEST(Training, RoundLogCsv) {
  std::vector<RoundLog> logs(2);
  logs[1].round = 2;
  logs[1].retx = 3;
  std::ostringstream out;
  write_round_logs_csv(out, logs);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "round,loss,acc,e_sq,retx");
}

TEST(Mnist, ParsesWellFormedFiles) {
  const fs::path dir = fs::temp_directory_path() / "otafl_mnist_ok";
  fs::create_directories(dir);
  write_images(dir / "img", 2051, 4, 4);
  write_labels(dir / "lab", 2049, 4);
  const auto d = load_mnist_idx(dir / "img", dir / "lab");
  EXPECT_EQ(d.samples(), 4);
  EXPECT_EQ(d.dims(), 784);
  EXPECT_EQ(d.classes, 10);
  EXPECT_NEAR(d.features(0, 0), 7.0 / 255.0, 1e-15);
  EXPECT_EQ(d.labels[0], 3);
  const auto sub = subsample(d, 0.5, 1);
  EXPECT_EQ(sub.samples(), 2);
}

TEST(Mnist, DistinctParseErrors) {
  const fs::path dir = fs::temp_directory_path() / "otafl_mnist_bad";
  fs::create_directories(dir);
  write_images(dir / "img", 2051, 4, 4);
  write_labels(dir / "lab", 2049, 4);
  write_images(dir / "img_magic", 1234, 4, 4);
  write_images(dir / "img_short", 2051, 4, 3);
  write_labels(dir / "lab_count", 2049, 5);
  write_labels(dir / "lab_range", 2049, 4, 12);
  using K = MnistParseError::Kind;
  EXPECT_EQ(parse_kind(dir / "img_magic", dir / "lab"), K::MagicMismatch);
  EXPECT_EQ(parse_kind(dir / "img_short", dir / "lab"), K::Truncated);
  EXPECT_EQ(parse_kind(dir / "img", dir / "lab_count"), K::CountMismatch);
  EXPECT_EQ(parse_kind(dir / "img", dir / "lab_range"), K::LabelRange);
  EXPECT_EQ(parse_kind(dir / "missing", dir / "lab"), K::Io);
}
