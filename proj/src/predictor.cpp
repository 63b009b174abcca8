#include "iaqm/predictor.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "iaqm/rng.hpp"

namespace iaqm::predictor {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void Adam::step(VectorXd& params, const VectorXd& grad) {
  ++t_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  params.array() -=
      cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.epsilon);
}

PredictorConfig PredictorConfig::for_samples(int n_samples, uint64_t seed) {
  PredictorConfig cfg;
  cfg.shape.hidden = neurons_per_layer(cfg.shape.steps, n_samples, cfg.shape.layers);
  cfg.seed = seed;
  return cfg;
}

PreparedData prepare(const EceSeries& series, int steps, double split) {
  const auto rows = static_cast<Index>(series.size()) - steps;
  if (rows < 2) {
    throw std::invalid_argument("series of length " + std::to_string(series.size()) +
                                " is too short for a train/test split");
  }
  const Index n_train = std::clamp<Index>(static_cast<Index>(std::floor(split * static_cast<double>(rows))), 1, rows - 1);
  const auto values = series.as_double();
  const auto scaler = MinMaxScaler::fit(std::span(values).first(static_cast<size_t>(n_train + steps)));
  return prepare(series, steps, split, scaler);
}

PreparedData prepare(const EceSeries& series, int steps, double split, const MinMaxScaler& scaler) {
  const auto rows = static_cast<Index>(series.size()) - steps;
  if (rows < 2) {
    throw std::invalid_argument("series of length " + std::to_string(series.size()) +
                                " is too short for a train/test split");
  }
  const Index n_train = std::clamp<Index>(static_cast<Index>(std::floor(split * static_cast<double>(rows))), 1, rows - 1);
  const auto normalized = scaler.apply(series.as_double());
  const auto all = build_windows(normalized, steps);
  return PreparedData{scaler, all.slice(0, n_train), all.slice(n_train, rows)};
}

CongestionPredictor::CongestionPredictor(PredictorConfig cfg)
    : CongestionPredictor(cfg, LstmNetwork::initialized(cfg.shape, sim::derive_seed(cfg.seed, "predictor"))) {}

CongestionPredictor::CongestionPredictor(PredictorConfig cfg, LstmNetwork net)
    : cfg_(cfg),
      net_(std::move(net)),
      adam_(cfg.adam, net_.param_count()),
      dropout_rng_(sim::derive_seed(cfg.seed, "dropout")) {
  if (!(net_.shape() == cfg_.shape)) throw std::invalid_argument("network shape differs from config");
  if (cfg_.dropout < 0.0 || cfg_.dropout >= 1.0) throw std::invalid_argument("dropout must be in [0,1)");
  if (cfg_.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
}

double CongestionPredictor::train_epoch(const SupervisedWindows& train) {
  const Index rows = train.rows();
  const Index h = cfg_.shape.hidden;
  const double keep = 1.0 - cfg_.dropout;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  VectorXd grad;
  DropoutMasks masks(cfg_.shape.layers);
  double total = 0.0;

  for (Index start = 0; start < rows; start += cfg_.batch_size) {
    const Index n = std::min<Index>(cfg_.batch_size, rows - start);
    const DropoutMasks* mask_ptr = nullptr;
    if (cfg_.dropout > 0.0) {
      for (auto& m : masks) {
        m.resize(h, n);
        for (Index j = 0; j < m.size(); ++j) m(j) = unif(dropout_rng_) < keep ? 1.0 / keep : 0.0;
      }
      mask_ptr = &masks;
    }
    const double loss = net_.loss_and_gradient(train.x.middleRows(start, n), train.y.segment(start, n),
                                               mask_ptr, grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      throw std::runtime_error("LSTM training diverged: non-finite loss at window " +
                               std::to_string(windows_visited_));
    }
    adam_.step(net_.params(), grad);
    windows_visited_ += static_cast<uint64_t>(n);
    total += loss * static_cast<double>(n);
  }
  return total / static_cast<double>(rows);
}

FitReport CongestionPredictor::score(const PreparedData& data) const {
  FitReport r;
  r.split = cfg_.train_split;
  r.train_rows = static_cast<size_t>(data.train.rows());
  r.test_rows = static_cast<size_t>(data.test.rows());
  auto eval = [&](const SupervisedWindows& w, double& out_rmse, double& out_mae) {
    const VectorXd p = net_.forward_batch(w.x);
    const std::span<const double> actual(w.y.data(), static_cast<size_t>(w.y.size()));
    const std::span<const double> pred(p.data(), static_cast<size_t>(p.size()));
    out_rmse = rmse(actual, pred);
    out_mae = mae(actual, pred);
  };
  eval(data.train, r.rmse_train, r.mae_train);
  eval(data.test, r.rmse_test, r.mae_test);
  return r;
}

FitReport CongestionPredictor::fit(const PreparedData& data, int epochs) {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  const auto t0 = std::chrono::steady_clock::now();
  scaler_ = data.scaler;
  std::vector<double> losses;
  for (int e = 0; e < epochs; ++e) losses.push_back(train_epoch(data.train));
  FitReport r = score(data);
  r.epochs = epochs;
  r.epoch_loss = std::move(losses);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

FitReport CongestionPredictor::pretrain(const EceSeries& series, int epochs) {
  return fit(prepare(series, cfg_.shape.steps, cfg_.train_split), epochs);
}

FitReport CongestionPredictor::retrain_one_epoch(const EceSeries& series) {
  if (series.counts.empty()) throw std::invalid_argument("re-training needs a non-empty series");
  return fit(prepare(series, cfg_.shape.steps, cfg_.train_split), 1);
}

FitReport CongestionPredictor::evaluate(const EceSeries& series) const {
  return score(prepare(series, cfg_.shape.steps, cfg_.train_split));
}

double CongestionPredictor::predict_next(std::span<const double> recent_counts) const {
  const auto steps = static_cast<size_t>(cfg_.shape.steps);
  if (recent_counts.size() < steps) {
    throw std::invalid_argument("predict_next needs " + std::to_string(steps) + " counts");
  }
  const auto window = scaler_.apply(recent_counts.last(steps));
  return scaler_.invert(net_.forward(window));
}

// Checkpoint: line-oriented text. Doubles are written as hex floats so that
// a reload reproduces every bit.
namespace {

constexpr const char* kMagic = "iaqm-lstm-checkpoint 1";

void write_vector(std::ostream& out, const char* key, const VectorXd& v) {
  out << key << ' ' << v.size() << '\n';
  for (Index i = 0; i < v.size(); ++i) out << v(i) << '\n';
}

std::string expect_key(std::istream& in, const std::string& key) {
  std::string k;
  if (!(in >> k) || k != key) {
    throw std::runtime_error("checkpoint: expected '" + key + "', found '" + k + "'");
  }
  std::string value;
  in >> value;
  return value;
}

double parse_double(const std::string& s) {
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("checkpoint: bad number '" + s + "'");
  return v;
}

VectorXd read_vector(std::istream& in, const std::string& key) {
  const auto n = static_cast<Index>(std::stoll(expect_key(in, key)));
  VectorXd v(n);
  std::string tok;
  for (Index i = 0; i < n; ++i) {
    if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated " + key);
    v(i) = parse_double(tok);
  }
  return v;
}

}  // namespace

void CongestionPredictor::save(std::ostream& out) const {
  out << kMagic << '\n' << std::hexfloat;
  out << "steps " << cfg_.shape.steps << '\n'
      << "layers " << cfg_.shape.layers << '\n'
      << "hidden " << cfg_.shape.hidden << '\n'
      << "dropout " << cfg_.dropout << '\n'
      << "batch_size " << cfg_.batch_size << '\n'
      << "train_split " << cfg_.train_split << '\n'
      << "learning_rate " << cfg_.adam.learning_rate << '\n'
      << "beta1 " << cfg_.adam.beta1 << '\n'
      << "beta2 " << cfg_.adam.beta2 << '\n'
      << "epsilon " << cfg_.adam.epsilon << '\n'
      << "seed " << cfg_.seed << '\n'
      << "scaler_min " << scaler_.min << '\n'
      << "scaler_max " << scaler_.max << '\n'
      << "windows_visited " << windows_visited_ << '\n'
      << "adam_steps " << adam_.t_ << '\n';
  std::ostringstream rng;
  rng << dropout_rng_;
  out << "dropout_rng " << rng.str().size() << '\n' << rng.str() << '\n';
  write_vector(out, "params", net_.params());
  write_vector(out, "adam_m", adam_.m_);
  write_vector(out, "adam_v", adam_.v_);
  out << std::defaultfloat;
}

void CongestionPredictor::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  save(out);
}

CongestionPredictor CongestionPredictor::load(std::istream& in) {
  std::string magic;
  std::getline(in, magic);
  if (magic != kMagic) throw std::runtime_error("not a predictor checkpoint");
  PredictorConfig cfg;
  cfg.shape.steps = std::stoi(expect_key(in, "steps"));
  cfg.shape.layers = std::stoi(expect_key(in, "layers"));
  cfg.shape.hidden = std::stoi(expect_key(in, "hidden"));
  cfg.dropout = parse_double(expect_key(in, "dropout"));
  cfg.batch_size = std::stoi(expect_key(in, "batch_size"));
  cfg.train_split = parse_double(expect_key(in, "train_split"));
  cfg.adam.learning_rate = parse_double(expect_key(in, "learning_rate"));
  cfg.adam.beta1 = parse_double(expect_key(in, "beta1"));
  cfg.adam.beta2 = parse_double(expect_key(in, "beta2"));
  cfg.adam.epsilon = parse_double(expect_key(in, "epsilon"));
  cfg.seed = std::stoull(expect_key(in, "seed"));
  MinMaxScaler scaler;
  scaler.min = parse_double(expect_key(in, "scaler_min"));
  scaler.max = parse_double(expect_key(in, "scaler_max"));
  const uint64_t visited = std::stoull(expect_key(in, "windows_visited"));
  const int64_t adam_steps = std::stoll(expect_key(in, "adam_steps"));
  const size_t rng_len = std::stoull(expect_key(in, "dropout_rng"));
  in.get();
  std::string rng_text(rng_len, '\0');
  in.read(rng_text.data(), static_cast<std::streamsize>(rng_len));

  LstmNetwork net(cfg.shape);
  VectorXd params = read_vector(in, "params");
  if (params.size() != net.param_count()) throw std::runtime_error("checkpoint: parameter count mismatch");
  net.params() = std::move(params);

  CongestionPredictor p(cfg, std::move(net));
  p.scaler_ = scaler;
  p.windows_visited_ = visited;
  p.adam_.t_ = adam_steps;
  p.adam_.m_ = read_vector(in, "adam_m");
  p.adam_.v_ = read_vector(in, "adam_v");
  if (p.adam_.m_.size() != p.net_.param_count() || p.adam_.v_.size() != p.net_.param_count()) {
    throw std::runtime_error("checkpoint: optimizer state size mismatch");
  }
  std::istringstream rng(rng_text);
  rng >> p.dropout_rng_;
  if (!rng) throw std::runtime_error("checkpoint: bad dropout rng state");
  return p;
}

CongestionPredictor CongestionPredictor::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  return load(in);
}

}  // namespace iaqm::predictor
