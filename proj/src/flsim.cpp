#include "otafl/flsim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "otafl/asymptotic.hpp"
#include "otafl/errors.hpp"
#include "otafl/mimo_solver.hpp"

namespace otafl {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

// Row-wise softmax, stabilised by the row maximum.
MatrixXd softmax_rows(const MatrixXd& z) {
  MatrixXd p = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
  return p.array().colwise() / p.rowwise().sum().array();
}

// Mean cross-entropy from logits.
double cross_entropy(const MatrixXd& z, const std::vector<int>& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    total += lse - z(i, y[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(z.rows());
}

MatrixXd one_hot(const std::vector<int>& y, int classes) {
  MatrixXd out = MatrixXd::Zero(static_cast<Eigen::Index>(y.size()), classes);
  for (std::size_t i = 0; i < y.size(); ++i) out(static_cast<Eigen::Index>(i), y[i]) = 1.0;
  return out;
}

MatrixXd sigmoid(const MatrixXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

struct Selection {
  MatrixXd x;
  std::vector<int> y;
};

Selection select(const Dataset& data, std::span<const int> rows) {
  if (rows.empty()) return {data.features, data.labels};
  Selection s;
  s.x.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  s.y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < data.samples(), "row index out of range");
    s.x.row(static_cast<Eigen::Index>(i)) = data.features.row(rows[i]);
    s.y.push_back(data.labels[static_cast<std::size_t>(rows[i])]);
  }
  return s;
}

// Views into the flat parameter vector.
struct LayerView {
  Eigen::Index offset;
  Eigen::Index rows;
  Eigen::Index cols;
};

struct Layout {
  LayerView w1, b1, w2, b2;  // logistic uses w1/b1 only
};

Layout layout_of(const Model& m) {
  Layout l{};
  if (m.arch == Architecture::Logistic) {
    l.w1 = {0, m.classes, m.dims};
    l.b1 = {l.w1.rows * l.w1.cols, m.classes, 1};
  } else {
    l.w1 = {0, m.hidden, m.dims};
    l.b1 = {l.w1.rows * l.w1.cols, m.hidden, 1};
    l.w2 = {l.b1.offset + m.hidden, m.classes, m.hidden};
    l.b2 = {l.w2.offset + m.classes * m.hidden, m.classes, 1};
  }
  return l;
}

ConstRowMap view(const VectorXd& p, const LayerView& v) {
  return ConstRowMap(p.data() + v.offset, v.rows, v.cols);
}
RowMap view(VectorXd& p, const LayerView& v) { return RowMap(p.data() + v.offset, v.rows, v.cols); }

struct Forward {
  MatrixXd hidden;  // MLP only
  MatrixXd logits;
};

Forward forward(const Model& m, const MatrixXd& x) {
  const Layout l = layout_of(m);
  Forward f;
  const auto w1 = view(m.params, l.w1);
  const Eigen::VectorXd b1 = view(m.params, l.b1).col(0);
  const MatrixXd a1 = (x * w1.transpose()).rowwise() + b1.transpose();
  if (m.arch == Architecture::Logistic) {
    f.logits = a1;
    return f;
  }
  f.hidden = sigmoid(a1);
  const auto w2 = view(m.params, l.w2);
  const Eigen::VectorXd b2 = view(m.params, l.b2).col(0);
  f.logits = (f.hidden * w2.transpose()).rowwise() + b2.transpose();
  return f;
}

Complex symbol_mean(const CVectorXd& s) { return s.mean(); }

double symbol_scale(const CVectorXd& s, Complex mean) {
  const double var = (s.array() - mean).abs2().mean();
  return var > 0.0 ? std::sqrt(var) : 1.0;
}

// Transmit design for one round.
struct RoundDesign {
  TransmitConfig cfg;
  std::vector<double> ratios;
};

RoundDesign design_round(const ChannelSet& channels, const TrainConfig& config) {
  const SystemModel& system = config.system;
  RoundDesign out;
  if (!channels.scenario.has_receive_beamformer()) {
    const MisoInstance inst = MisoInstance::from_channels(channels, system);
    const DlrSolution sol =
        config.policy == LrPolicy::Dlr ? solve_dlr_miso(inst, config.bounds) : fixed_lr_solution(inst);
    out.cfg.b = sol.b;
    out.cfg.eta = sol.eta;
    out.ratios = sol.r;
    return out;
  }
  const MimoInstance inst = MimoInstance::from_channels(channels, system);
  const DlrBounds bounds = config.policy == LrPolicy::Dlr ? config.bounds : DlrBounds::fixed();
  CVectorXd m;
  DlrSolution dlr;
  if (config.beamformer == BeamformerPolicy::ClosedForm) {
    m = closed_form_beamformer(channels);
    dlr = solve_dlr_given_m(inst, m, bounds);
  } else if (config.policy == LrPolicy::Dlr) {
    JointOptions opts;
    opts.seed = config.seed;
    const MimoSolution sol = solve_joint(inst, bounds, opts);
    m = sol.m;
    dlr = sol.dlr;
  } else {
    const std::vector<double> ones(inst.h.size(), 1.0);
    BeamformingOptions opts;
    opts.feasibility.seed = config.seed;
    m = solve_beamforming(inst, ones, opts).m;
    dlr = solve_dlr_given_m(inst, m, bounds);
  }
  out.cfg = transmit_config(inst, m, dlr);
  out.ratios = dlr.r;
  return out;
}

void evaluate(RoundLog& log, const Model& model, const Task& task) {
  log.loss = loss(model, task.train);
  log.acc = accuracy(model, task.test);
}

VectorXd device_average_gradient(const Model& model, const Task& task,
                                 const std::vector<std::vector<int>>& parts) {
  VectorXd g = VectorXd::Zero(model.size());
  for (const auto& p : parts) g += gradient(model, task.train, p);
  return g / static_cast<double>(parts.size());
}

}  // namespace

std::string to_string(Architecture arch) {
  return arch == Architecture::Logistic ? "logistic" : "mlp";
}

Architecture parse_architecture(const std::string& text) {
  if (text == "logistic") return Architecture::Logistic;
  if (text == "mlp") return Architecture::Mlp;
  throw ContractViolation("unknown model architecture '" + text + "'");
}

std::string to_string(LrPolicy policy) { return policy == LrPolicy::Dlr ? "dlr" : "fixed"; }

LrPolicy parse_lr_policy(const std::string& text) {
  if (text == "dlr") return LrPolicy::Dlr;
  if (text == "fixed" || text == "ndlr") return LrPolicy::Fixed;
  throw ContractViolation("unknown learning-rate policy '" + text + "'");
}

Model Model::logistic(int dims, int classes) {
  require(dims >= 1 && classes >= 2, "logistic model needs dims >= 1 and classes >= 2");
  Model m;
  m.arch = Architecture::Logistic;
  m.dims = dims;
  m.classes = classes;
  m.params = VectorXd::Zero(m.expected_size());
  return m;
}

Model Model::mlp(int dims, int classes, int hidden) {
  require(dims >= 1 && classes >= 2 && hidden >= 1, "MLP needs dims, hidden >= 1 and classes >= 2");
  Model m;
  m.arch = Architecture::Mlp;
  m.dims = dims;
  m.classes = classes;
  m.hidden = hidden;
  m.params = VectorXd::Zero(m.expected_size());
  return m;
}

Eigen::Index Model::expected_size() const {
  if (arch == Architecture::Logistic) return static_cast<Eigen::Index>(classes) * (dims + 1);
  return static_cast<Eigen::Index>(hidden) * (dims + 1) + static_cast<Eigen::Index>(classes) * (hidden + 1);
}

void Model::validate() const {
  require(params.size() == expected_size(), "model parameter count does not match architecture");
  require(params.allFinite(), "model parameters must be finite");
}

Model init_model(Architecture arch, int dims, int classes, int hidden, std::uint64_t seed) {
  if (arch == Architecture::Logistic) return Model::logistic(dims, classes);
  Model m = Model::mlp(dims, classes, hidden);
  Rng rng = make_rng(seed, {0x1417ULL});
  const Layout l = layout_of(m);
  std::normal_distribution<double> w1(0.0, 1.0 / std::sqrt(static_cast<double>(dims)));
  std::normal_distribution<double> w2(0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
  auto a = view(m.params, l.w1);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = w1(rng);
  auto b = view(m.params, l.w2);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = w2(rng);
  return m;
}

void Dataset::validate() const {
  require(static_cast<std::size_t>(features.rows()) == labels.size(),
          "dataset: one label per sample required");
  require(classes >= 2, "dataset: at least two classes required");
  for (int y : labels) require(y >= 0 && y < classes, "dataset: label out of range");
  require(features.allFinite(), "dataset: features must be finite");
}

Dataset Dataset::subset(std::span<const int> indices) const {
  Dataset out;
  out.classes = classes;
  Selection s = select(*this, indices);
  out.features = std::move(s.x);
  out.labels = std::move(s.y);
  return out;
}

std::vector<std::vector<int>> partition_equal(Eigen::Index samples, int k, std::uint64_t seed) {
  require(k >= 1, "partition_equal: K must be >= 1");
  require(samples >= k, "partition_equal: fewer samples than devices");
  std::vector<int> order(static_cast<std::size_t>(samples));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, {0x9A27ULL});
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t each = static_cast<std::size_t>(samples) / static_cast<std::size_t>(k);
  std::vector<std::vector<int>> parts(static_cast<std::size_t>(k));
  for (std::size_t d = 0; d < parts.size(); ++d) {
    parts[d].assign(order.begin() + static_cast<std::ptrdiff_t>(d * each),
                    order.begin() + static_cast<std::ptrdiff_t>((d + 1) * each));
  }
  return parts;
}

double loss(const Model& model, const Dataset& data, std::span<const int> rows) {
  model.validate();
  const Selection s = select(data, rows);
  require(s.x.rows() > 0, "loss: empty batch");
  require(s.x.cols() == model.dims, "loss: feature dimension mismatch");
  return cross_entropy(forward(model, s.x).logits, s.y);
}

VectorXd gradient(const Model& model, const Dataset& data, std::span<const int> rows) {
  model.validate();
  const Selection s = select(data, rows);
  require(s.x.rows() > 0, "gradient: empty batch");
  require(s.x.cols() == model.dims, "gradient: feature dimension mismatch");
  const Forward f = forward(model, s.x);
  const double inv_n = 1.0 / static_cast<double>(s.x.rows());
  const MatrixXd g_out = (softmax_rows(f.logits) - one_hot(s.y, model.classes)) * inv_n;

  VectorXd grad = VectorXd::Zero(model.size());
  const Layout l = layout_of(model);
  if (model.arch == Architecture::Logistic) {
    view(grad, l.w1) = g_out.transpose() * s.x;
    view(grad, l.b1) = g_out.colwise().sum().transpose();
    return grad;
  }
  view(grad, l.w2) = g_out.transpose() * f.hidden;
  view(grad, l.b2) = g_out.colwise().sum().transpose();
  const MatrixXd d_hidden = g_out * view(model.params, l.w2);
  const MatrixXd d_pre = (d_hidden.array() * f.hidden.array() * (1.0 - f.hidden.array())).matrix();
  view(grad, l.w1) = d_pre.transpose() * s.x;
  view(grad, l.b1) = d_pre.colwise().sum().transpose();
  return grad;
}

double accuracy(const Model& model, const Dataset& data) {
  model.validate();
  require(data.samples() > 0, "accuracy: empty dataset");
  const MatrixXd z = forward(model, data.features).logits;
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index arg = 0;
    z.row(i).maxCoeff(&arg);
    if (arg == data.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(z.rows());
}

VectorXd local_update(const VectorXd& w, const VectorXd& grad, double mu_k) {
  require(w.size() == grad.size(), "local_update: shape mismatch");
  return w - mu_k * grad;
}

CVectorXd pack_symbols(const VectorXd& w) {
  require(w.size() >= 1, "pack_symbols: empty parameter vector");
  const Eigen::Index n = (w.size() + 1) / 2;
  CVectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double im = 2 * i + 1 < w.size() ? w(2 * i + 1) : 0.0;
    s(i) = Complex(w(2 * i), im);
  }
  return s;
}

EncodedModel encode_symbols(const VectorXd& w) {
  const std::array<VectorXd, 1> one{w};
  EncodedModel out;
  out.norm = pooled_normalization(one);
  out.symbols = encode_with(w, out.norm);
  return out;
}

SymbolNormalization pooled_normalization(std::span<const VectorXd> models) {
  require(!models.empty(), "pooled_normalization: no models");
  const Eigen::Index d = models.front().size();
  require(d >= 1, "pooled_normalization: empty parameter vector");
  const Eigen::Index n = (d + 1) / 2;
  CVectorXd all(n * static_cast<Eigen::Index>(models.size()));
  for (std::size_t k = 0; k < models.size(); ++k) {
    require(models[k].size() == d, "pooled_normalization: models differ in length");
    all.segment(static_cast<Eigen::Index>(k) * n, n) = pack_symbols(models[k]);
  }
  SymbolNormalization norm;
  norm.mean = symbol_mean(all);
  norm.scale = symbol_scale(all, norm.mean);
  norm.pad = d % 2 == 1;
  norm.length = d;
  return norm;
}

CVectorXd encode_with(const VectorXd& w, const SymbolNormalization& norm) {
  require(w.size() == norm.length, "encode_with: length differs from normalization");
  return ((pack_symbols(w).array() - norm.mean) / norm.scale).matrix();
}

VectorXd decode(const CVectorXd& symbols, const SymbolNormalization& norm) {
  require(symbols.size() == (norm.length + 1) / 2, "decode: symbol count mismatch");
  const CVectorXd raw = (symbols.array() * norm.scale + norm.mean).matrix();
  VectorXd w(norm.length);
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    w(2 * i) = raw(i).real();
    if (2 * i + 1 < norm.length) w(2 * i + 1) = raw(i).imag();
  }
  return w;
}

AggregationResult air_aggregate_round(std::span<const VectorXd> local_models,
                                      const ChannelSet& channels, const TransmitConfig& cfg,
                                      std::span<const double> ratios, const SystemModel& system,
                                      Rng& rng, int max_retx) {
  require(!local_models.empty(), "air_aggregate_round: no local models");
  require(static_cast<int>(local_models.size()) == channels.size() &&
              ratios.size() == local_models.size(),
          "air_aggregate_round: device counts differ");
  require(max_retx >= 0, "air_aggregate_round: max_retx must be >= 0");
  validate_config(system, cfg);

  const SymbolNormalization norm = pooled_normalization(local_models);
  const double kd = static_cast<double>(local_models.size());
  std::vector<CVectorXd> symbols;
  symbols.reserve(local_models.size());
  CVectorXd target = CVectorXd::Zero((norm.length + 1) / 2);
  for (std::size_t k = 0; k < local_models.size(); ++k) {
    symbols.push_back(encode_with(local_models[k], norm));
    target += symbols.back() / (kd * ratios[k]);
  }
  const std::vector<Complex> gains = effective_gains(channels, cfg);
  const Eigen::Index slots = target.size();
  const int nt = channels.scenario.n_t;

  std::normal_distribution<double> normal(0.0, std::sqrt(system.sigma2 / 2.0));
  auto draw_noise = [&]() {
    CVectorXd noise(slots);
    CVectorXd antenna(nt);
    for (Eigen::Index i = 0; i < slots; ++i) {
      for (int a = 0; a < nt; ++a) antenna(a) = Complex(normal(rng), normal(rng));
      noise(i) = cfg.m ? cfg.m->dot(antenna) : antenna(0);
    }
    return noise;
  };

  // Per-symbol error energy against the per-symbol power of the target.
  const double p_des = std::max(target.squaredNorm() / static_cast<double>(slots), 1e-300);
  AggregationResult out;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  CVectorXd received;
  for (int attempt = 0;; ++attempt) {
    const CVectorXd noise = system.sigma2 > 0.0 ? draw_noise() : CVectorXd::Zero(slots);
    received = aggregate_block(symbols, gains, cfg.eta, noise);
    out.e_sq = (received - target).squaredNorm();
    const double p = retransmission_probability(out.e_sq / static_cast<double>(slots), p_des, system.a);
    if (!(coin(rng) < p)) break;
    if (attempt == max_retx) {
      out.retx_exhausted = true;
      break;
    }
    ++out.retransmissions;
  }
  out.global = decode(received, norm);
  return out;
}

void TrainConfig::validate() const {
  require(mu > 0.0 && std::isfinite(mu), "training: mu must be positive");
  require(epochs >= 1, "training: epochs must be >= 1");
  require(max_retx >= 0, "training: max_retx must be >= 0");
  bounds.validate();
  system.validate();
}

std::vector<RoundLog> train_federated(const Task& task, const TrainConfig& config, int k,
                                      const RoundObserver& observer) {
  config.validate();
  task.train.validate();
  task.test.validate();
  require(config.system.devices() == k, "training: system model must describe K devices");
  const auto parts = partition_equal(task.train.samples(), k, config.seed);
  Model model = init_model(config.arch, task.train.dims(), task.train.classes, config.hidden,
                           config.seed);

  std::vector<RoundLog> logs;
  for (int round = 1; round <= config.epochs; ++round) {
    const auto r64 = static_cast<std::uint64_t>(round);
    const ChannelSet channels =
        draw_channels(config.system.scenario, k, mix_seed(config.seed, {0xC4A7ULL, r64}));
    const RoundDesign design = design_round(channels, config);

    std::vector<VectorXd> local(static_cast<std::size_t>(k));
    for (int d = 0; d < k; ++d) {
      const auto du = static_cast<std::size_t>(d);
      local[du] = local_update(model.params, gradient(model, task.train, parts[du]),
                               design.ratios[du] * config.mu);
    }
    Rng noise_rng = make_rng(config.seed, {0x4E015EULL, r64});
    const AggregationResult agg = air_aggregate_round(local, channels, design.cfg, design.ratios,
                                                      config.system, noise_rng, config.max_retx);
    model.params = agg.global;

    RoundLog log;
    log.round = round;
    log.e_sq = agg.e_sq;
    log.retx = agg.retransmissions;
    log.retx_exhausted = agg.retx_exhausted;
    evaluate(log, model, task);
    logs.push_back(log);
    if (observer) observer(round, model);
  }
  return logs;
}

std::vector<RoundLog> train_centralized(const Task& task, const TrainConfig& config, int k,
                                        const RoundObserver& observer) {
  config.validate();
  task.train.validate();
  task.test.validate();
  const auto parts = partition_equal(task.train.samples(), k, config.seed);
  Model model = init_model(config.arch, task.train.dims(), task.train.classes, config.hidden,
                           config.seed);
  std::vector<RoundLog> logs;
  for (int round = 1; round <= config.epochs; ++round) {
    model.params -= config.mu * device_average_gradient(model, task, parts);
    RoundLog log;
    log.round = round;
    evaluate(log, model, task);
    logs.push_back(log);
    if (observer) observer(round, model);
  }
  return logs;
}

void write_round_logs_csv(std::ostream& out, std::span<const RoundLog> logs) {
  out << "round,loss,acc,e_sq,retx\n";
  char buf[160];
  for (const auto& l : logs) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%d\n", l.round, l.loss, l.acc, l.e_sq,
                  l.retx);
    out << buf;
  }
}

Task synthetic_task(std::uint64_t seed) {
  constexpr int kTrain = 2000;
  constexpr int kTest = 500;
  Rng rng = make_rng(seed, {0x5E7ULL});
  std::normal_distribution<double> normal(0.0, 1.0);
  auto make = [&](int n) {
    Dataset d;
    d.classes = 2;
    d.features.resize(n, 2);
    d.labels.resize(static_cast<std::size_t>(n));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < n; ++i) {
      const int label = order[static_cast<std::size_t>(i)] % 2;
      const double centre = label == 1 ? 1.5 : -1.5;
      d.labels[static_cast<std::size_t>(i)] = label;
      d.features(i, 0) = centre + normal(rng);
      d.features(i, 1) = centre + normal(rng);
    }
    return d;
  };
  Task t;
  t.train = make(kTrain);
  t.test = make(kTest);
  return t;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MnistParseError(MnistParseError::Kind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw MnistParseError(MnistParseError::Kind::Truncated, path.string() + ": truncated header");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void expect_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    char buf[96];
    std::snprintf(buf, sizeof buf, ": magic 0x%08x, expected 0x%08x", got, want);
    throw MnistParseError(MnistParseError::Kind::MagicMismatch, path.string() + buf);
  }
}

}  // namespace

Dataset load_mnist_idx(const std::filesystem::path& image_path,
                       const std::filesystem::path& label_path) {
  const auto images = read_file(image_path);
  const auto labels = read_file(label_path);
  expect_magic(read_be32(images, 0, image_path), 0x00000803u, image_path);
  expect_magic(read_be32(labels, 0, label_path), 0x00000801u, label_path);

  const std::uint32_t n_images = read_be32(images, 4, image_path);
  const std::uint32_t rows = read_be32(images, 8, image_path);
  const std::uint32_t cols = read_be32(images, 12, image_path);
  const std::uint32_t n_labels = read_be32(labels, 4, label_path);
  if (n_images != n_labels) {
    throw MnistParseError(MnistParseError::Kind::CountMismatch,
                          std::to_string(n_images) + " images but " + std::to_string(n_labels) +
                              " labels");
  }
  const std::size_t pixels = std::size_t{rows} * cols;
  if (images.size() < 16 + pixels * n_images) {
    throw MnistParseError(MnistParseError::Kind::Truncated, image_path.string() + ": truncated pixel data");
  }
  if (labels.size() < 8 + std::size_t{n_labels}) {
    throw MnistParseError(MnistParseError::Kind::Truncated, label_path.string() + ": truncated labels");
  }

  Dataset d;
  d.classes = 10;
  d.features.resize(n_images, static_cast<Eigen::Index>(pixels));
  d.labels.resize(n_images);
  for (std::size_t i = 0; i < n_images; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          images[16 + i * pixels + p] / 255.0;
    }
    const int y = labels[8 + i];
    if (y > 9) {
      throw MnistParseError(MnistParseError::Kind::LabelRange,
                            label_path.string() + ": label " + std::to_string(y) + " out of range");
    }
    d.labels[i] = y;
  }
  return d;
}

Dataset subsample(const Dataset& data, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, "subsample: fraction must be in (0, 1]");
  std::vector<int> order(static_cast<std::size_t>(data.samples()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, {0x5B5ULL});
  std::shuffle(order.begin(), order.end(), rng);
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size()))));
  order.resize(std::min(keep, order.size()));
  std::sort(order.begin(), order.end());
  return data.subset(order);
}

}  // namespace otafl
