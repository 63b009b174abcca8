#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "iaqm/lstm.hpp"
#include "iaqm/series.hpp"

namespace iaqm::predictor {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig cfg, Eigen::Index n) : cfg_(cfg), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  const AdamConfig& config() const { return cfg_; }
  int64_t steps() const { return t_; }

 private:
  friend class CongestionPredictor;
  AdamConfig cfg_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  int64_t t_ = 0;
};

struct PredictorConfig {
  LstmShape shape{10, 3, 30};
  double dropout = 0.2;
  int batch_size = 64;
  double train_split = 0.8;
  AdamConfig adam;
  uint64_t seed = 1;

  /// Three layers of ten steps sized for `n_samples` training samples.
  static PredictorConfig for_samples(int n_samples, uint64_t seed = 1);
};

/// Errors in normalized units.
struct FitReport {
  double rmse_train = 0.0;
  double rmse_test = 0.0;
  double mae_train = 0.0;
  double mae_test = 0.0;
  int epochs = 0;
  double split = 0.8;
  size_t train_rows = 0;
  size_t test_rows = 0;
  double wall_seconds = 0.0;
  std::vector<double> epoch_loss;
};

/// Normalized windows of a series split chronologically into train/test,
/// with scaler bounds taken from the values the training rows touch.
struct PreparedData {
  MinMaxScaler scaler;
  SupervisedWindows train;
  SupervisedWindows test;
};

PreparedData prepare(const EceSeries& series, int steps, double split);
PreparedData prepare(const EceSeries& series, int steps, double split, const MinMaxScaler& scaler);

/// LSTM forecaster of the next interval's ECE count, with its normalization
/// bounds and optimizer state.
class CongestionPredictor {
 public:
  explicit CongestionPredictor(PredictorConfig cfg = {});
  CongestionPredictor(PredictorConfig cfg, LstmNetwork net);

  /// Fits bounds on the training split and trains for `epochs` epochs.
  FitReport pretrain(const EceSeries& series, int epochs);
  /// One epoch on new data, starting from the current weights. Bounds are
  /// refitted on the new series' training split.
  FitReport retrain_one_epoch(const EceSeries& series);
  /// Scores current weights on `series` with bounds fitted on its training
  /// split; the model's own bounds are untouched.
  FitReport evaluate(const EceSeries& series) const;

  /// Next-interval count predicted from the most recent `steps` raw counts.
  double predict_next(std::span<const double> recent_counts) const;

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static CongestionPredictor load(std::istream& in);
  static CongestionPredictor load(const std::filesystem::path& path);

  const PredictorConfig& config() const { return cfg_; }
  const LstmNetwork& network() const { return net_; }
  LstmNetwork& network() { return net_; }
  const MinMaxScaler& scaler() const { return scaler_; }
  void set_scaler(MinMaxScaler s) { scaler_ = s; }
  /// Training windows consumed so far, over all epochs.
  uint64_t windows_visited() const { return windows_visited_; }

 private:
  FitReport fit(const PreparedData& data, int epochs);
  double train_epoch(const SupervisedWindows& train);
  FitReport score(const PreparedData& data) const;

  PredictorConfig cfg_;
  LstmNetwork net_;
  MinMaxScaler scaler_;
  Adam adam_;
  std::mt19937_64 dropout_rng_;
  uint64_t windows_visited_ = 0;
};

}  // namespace iaqm::predictor
