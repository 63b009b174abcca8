#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace iaqm::predictor {

/// ceil((n_in + sqrt(n_samples)) / n_layers). Throws std::invalid_argument
/// for non-positive arguments.
int neurons_per_layer(int n_in, int n_samples, int n_layers);

struct LstmShape {
  int steps = 10;
  int layers = 3;
  int hidden = 30;

  bool operator==(const LstmShape&) const = default;
};

/// Per-layer dropout masks on hidden outputs, each hidden x batch, already
/// scaled by 1/(1-rate). Constant across time steps of a window.
using DropoutMasks = std::vector<Eigen::MatrixXd>;

/// Stacked LSTM over a scalar input sequence with a linear scalar head fed by
/// the top layer's last hidden state. Gate order in every weight block is
/// input, forget, candidate, output. All parameters live in one flat vector:
/// per layer W (4H x in), U (4H x H), b (4H), then head w (H) and head b.
class LstmNetwork {
 public:
  LstmNetwork() = default;
  /// All-zero parameters.
  explicit LstmNetwork(LstmShape shape);

  /// Uniform(+-1/sqrt(fan_in)) weights, forget-gate bias 1, other biases 0.
  static LstmNetwork initialized(LstmShape shape, uint64_t seed);

  const LstmShape& shape() const { return shape_; }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::Index param_count() const { return params_.size(); }

  /// Single window of `steps` values, no dropout.
  double forward(std::span<const double> window) const;
  /// One prediction per row of `windows` (batch x steps), no dropout.
  Eigen::VectorXd forward_batch(const Eigen::MatrixXd& windows) const;

  /// Mean squared error over the batch and its gradient with respect to
  /// params(). `masks` may be null (no dropout).
  double loss_and_gradient(const Eigen::MatrixXd& windows, const Eigen::VectorXd& targets,
                           const DropoutMasks* masks, Eigen::VectorXd& grad) const;

  double loss(const Eigen::MatrixXd& windows, const Eigen::VectorXd& targets,
              const DropoutMasks* masks = nullptr) const;

 private:
  struct LayerOffsets {
    Eigen::Index w, u, b;
    int in;
  };
  struct Cache;

  void compute_offsets();
  void run_forward(const Eigen::MatrixXd& windows, const DropoutMasks* masks, Cache* cache,
                   Eigen::VectorXd* out) const;

  LstmShape shape_;
  std::vector<LayerOffsets> offsets_;
  Eigen::Index head_w_ = 0;
  Eigen::Index head_b_ = 0;
  Eigen::VectorXd params_;
};

}  // namespace iaqm::predictor
