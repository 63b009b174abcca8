#include "iaqm/lstm.hpp"

#include <cmath>
#include <stdexcept>

#include "iaqm/rng.hpp"

namespace iaqm::predictor {

using Eigen::Index;
using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

int neurons_per_layer(int n_in, int n_samples, int n_layers) {
  if (n_in < 1 || n_samples < 1 || n_layers < 1) {
    throw std::invalid_argument("neurons_per_layer: arguments must be >= 1");
  }
  const double n = (static_cast<double>(n_in) + std::sqrt(static_cast<double>(n_samples))) /
                   static_cast<double>(n_layers);
  return static_cast<int>(std::ceil(n - 1e-12));
}

namespace {

void sigmoid_inplace(Eigen::Block<MatrixXd> z) {
  z.array() = 1.0 / (1.0 + (-z.array()).exp());
}

}  // namespace

struct LstmNetwork::Cache {
  struct Layer {
    std::vector<MatrixXd> x;      // input at each step (in x B)
    std::vector<MatrixXd> gates;  // activated i, f, g, o (4H x B)
    std::vector<MatrixXd> c;
    std::vector<MatrixXd> tc;  // tanh(c)
    std::vector<MatrixXd> h;
  };
  std::vector<Layer> layers;
  MatrixXd top_last;  // masked top-layer output at the last step
  VectorXd pred;
};

LstmNetwork::LstmNetwork(LstmShape shape) : shape_(shape) {
  if (shape_.steps < 1 || shape_.layers < 1 || shape_.hidden < 1) {
    throw std::invalid_argument("LSTM shape entries must be >= 1");
  }
  compute_offsets();
}

void LstmNetwork::compute_offsets() {
  const Index h = shape_.hidden;
  Index pos = 0;
  offsets_.clear();
  for (int l = 0; l < shape_.layers; ++l) {
    const int in = l == 0 ? 1 : shape_.hidden;
    LayerOffsets o{};
    o.in = in;
    o.w = pos;
    pos += 4 * h * in;
    o.u = pos;
    pos += 4 * h * h;
    o.b = pos;
    pos += 4 * h;
    offsets_.push_back(o);
  }
  head_w_ = pos;
  pos += h;
  head_b_ = pos;
  pos += 1;
  params_ = VectorXd::Zero(pos);
}

LstmNetwork LstmNetwork::initialized(LstmShape shape, uint64_t seed) {
  LstmNetwork net(shape);
  sim::RandomStream rng(seed, "lstm_init");
  const Index h = shape.hidden;
  for (const auto& o : net.offsets_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(o.in + h));
    for (Index i = o.w; i < o.b; ++i) net.params_(i) = rng.uniform(-bound, bound);
    net.params_.segment(o.b + h, h).setOnes();
  }
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(h));
  for (Index i = net.head_w_; i < net.head_b_; ++i) net.params_(i) = rng.uniform(-head_bound, head_bound);
  return net;
}

void LstmNetwork::run_forward(const MatrixXd& windows, const DropoutMasks* masks, Cache* cache,
                              VectorXd* out) const {
  if (windows.cols() != shape_.steps) {
    throw std::invalid_argument("window length " + std::to_string(windows.cols()) +
                                " does not match model steps " + std::to_string(shape_.steps));
  }
  const Index batch = windows.rows();
  const Index h = shape_.hidden;
  const int steps = shape_.steps;

  std::vector<MatrixXd> seq(steps);
  for (int t = 0; t < steps; ++t) seq[t] = windows.col(t).transpose();
  if (cache != nullptr) cache->layers.assign(shape_.layers, {});

  for (int l = 0; l < shape_.layers; ++l) {
    const auto& o = offsets_[l];
    Map<const MatrixXd> w(params_.data() + o.w, 4 * h, o.in);
    Map<const MatrixXd> u(params_.data() + o.u, 4 * h, h);
    Map<const VectorXd> b(params_.data() + o.b, 4 * h);
    MatrixXd hs = MatrixXd::Zero(h, batch);
    MatrixXd cs = MatrixXd::Zero(h, batch);
    std::vector<MatrixXd> next(steps);
    for (int t = 0; t < steps; ++t) {
      MatrixXd z(4 * h, batch);
      z.noalias() = w * seq[t];
      z.noalias() += u * hs;
      z.colwise() += b;
      sigmoid_inplace(z.topRows(2 * h));
      z.middleRows(2 * h, h).array() = z.middleRows(2 * h, h).array().tanh();
      sigmoid_inplace(z.bottomRows(h));
      cs = z.middleRows(h, h).cwiseProduct(cs) + z.topRows(h).cwiseProduct(z.middleRows(2 * h, h));
      MatrixXd tc = cs.array().tanh().matrix();
      hs = z.bottomRows(h).cwiseProduct(tc);
      next[t] = masks != nullptr ? hs.cwiseProduct((*masks)[l]) : hs;
      if (cache != nullptr) {
        auto& lc = cache->layers[l];
        lc.x.push_back(std::move(seq[t]));
        lc.gates.push_back(std::move(z));
        lc.c.push_back(cs);
        lc.tc.push_back(std::move(tc));
        lc.h.push_back(hs);
      }
    }
    seq = std::move(next);
  }

  Map<const VectorXd> head_w(params_.data() + head_w_, h);
  VectorXd pred = (head_w.transpose() * seq[steps - 1]).transpose();
  pred.array() += params_(head_b_);
  if (cache != nullptr) {
    cache->top_last = seq[steps - 1];
    cache->pred = pred;
  }
  if (out != nullptr) *out = std::move(pred);
}

double LstmNetwork::forward(std::span<const double> window) const {
  MatrixXd w(1, static_cast<Index>(window.size()));
  for (size_t i = 0; i < window.size(); ++i) w(0, static_cast<Index>(i)) = window[i];
  return forward_batch(w)(0);
}

VectorXd LstmNetwork::forward_batch(const MatrixXd& windows) const {
  VectorXd out;
  run_forward(windows, nullptr, nullptr, &out);
  return out;
}

double LstmNetwork::loss(const MatrixXd& windows, const VectorXd& targets,
                         const DropoutMasks* masks) const {
  VectorXd pred;
  run_forward(windows, masks, nullptr, &pred);
  return (pred - targets).squaredNorm() / static_cast<double>(targets.size());
}

double LstmNetwork::loss_and_gradient(const MatrixXd& windows, const VectorXd& targets,
                                      const DropoutMasks* masks, VectorXd& grad) const {
  Cache cache;
  run_forward(windows, masks, &cache, nullptr);
  const Index batch = windows.rows();
  const Index h = shape_.hidden;
  const int steps = shape_.steps;

  const VectorXd err = cache.pred - targets;
  const double loss = err.squaredNorm() / static_cast<double>(batch);
  const Eigen::RowVectorXd dpred = (2.0 / static_cast<double>(batch)) * err.transpose();

  grad = VectorXd::Zero(params_.size());
  Map<const VectorXd> head_w(params_.data() + head_w_, h);
  grad.segment(head_w_, h).noalias() = cache.top_last * dpred.transpose();
  grad(head_b_) = dpred.sum();

  std::vector<MatrixXd> dy(steps, MatrixXd::Zero(h, batch));
  dy[steps - 1].noalias() = head_w * dpred;

  for (int l = shape_.layers - 1; l >= 0; --l) {
    const auto& o = offsets_[l];
    const auto& lc = cache.layers[l];
    Map<const MatrixXd> w(params_.data() + o.w, 4 * h, o.in);
    Map<const MatrixXd> u(params_.data() + o.u, 4 * h, h);
    Map<MatrixXd> gw(grad.data() + o.w, 4 * h, o.in);
    Map<MatrixXd> gu(grad.data() + o.u, 4 * h, h);
    Map<VectorXd> gb(grad.data() + o.b, 4 * h);

    MatrixXd dh_next = MatrixXd::Zero(h, batch);
    MatrixXd dc_next = MatrixXd::Zero(h, batch);
    MatrixXd dz(4 * h, batch);
    std::vector<MatrixXd> dx(l > 0 ? steps : 0);

    for (int t = steps - 1; t >= 0; --t) {
      MatrixXd dh = masks != nullptr ? dy[t].cwiseProduct((*masks)[l]) : dy[t];
      dh += dh_next;
      const auto& g = lc.gates[t];
      const auto i_g = g.topRows(h).array();
      const auto f_g = g.middleRows(h, h).array();
      const auto c_g = g.middleRows(2 * h, h).array();
      const auto o_g = g.bottomRows(h).array();
      const auto tc = lc.tc[t].array();

      const Eigen::ArrayXXd d_out = dh.array() * tc;
      const Eigen::ArrayXXd dc = dc_next.array() + dh.array() * o_g * (1.0 - tc * tc);
      if (t > 0) {
        dz.middleRows(h, h).array() = dc * lc.c[t - 1].array() * f_g * (1.0 - f_g);
      } else {
        dz.middleRows(h, h).setZero();
      }
      dz.topRows(h).array() = dc * c_g * i_g * (1.0 - i_g);
      dz.middleRows(2 * h, h).array() = dc * i_g * (1.0 - c_g * c_g);
      dz.bottomRows(h).array() = d_out * o_g * (1.0 - o_g);
      dc_next = (dc * f_g).matrix();

      gw.noalias() += dz * lc.x[t].transpose();
      if (t > 0) gu.noalias() += dz * lc.h[t - 1].transpose();
      gb.noalias() += dz.rowwise().sum();
      if (l > 0) dx[t].noalias() = w.transpose() * dz;
      dh_next.noalias() = u.transpose() * dz;
    }
    if (l > 0) dy = std::move(dx);
  }
  return loss;
}

}  // namespace iaqm::predictor
