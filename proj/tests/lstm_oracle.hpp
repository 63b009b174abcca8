#pragma once

#include <cmath>
#include <vector>

#include "iaqm/lstm.hpp"

// Scalar, loop-by-loop LSTM used as an independent reference. Parameter
// layout per layer: W (4H x in), U (4H x H), both column-major, then b (4H);
// gate rows ordered input, forget, candidate, output; then head w (H), head b.
namespace lstm_oracle {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double forward(const iaqm::predictor::LstmShape& s, const std::vector<double>& p,
                      const std::vector<double>& window) {
  const int H = s.hidden;
  std::vector<std::vector<double>> seq;
  for (double v : window) seq.push_back({v});
  size_t pos = 0;
  for (int l = 0; l < s.layers; ++l) {
    const int in = l == 0 ? 1 : H;
    const size_t w0 = pos, u0 = w0 + 4 * H * in, b0 = u0 + 4 * H * H;
    pos = b0 + 4 * H;
    std::vector<double> h(H, 0.0), c(H, 0.0);
    std::vector<std::vector<double>> out;
    for (const auto& x : seq) {
      std::vector<double> z(4 * H);
      for (int r = 0; r < 4 * H; ++r) {
        double acc = p[b0 + r];
        for (int k = 0; k < in; ++k) acc += p[w0 + k * 4 * H + r] * x[k];
        for (int k = 0; k < H; ++k) acc += p[u0 + k * 4 * H + r] * h[k];
        z[r] = acc;
      }
      for (int j = 0; j < H; ++j) {
        const double i = sigmoid(z[j]);
        const double f = sigmoid(z[H + j]);
        const double g = std::tanh(z[2 * H + j]);
        const double o = sigmoid(z[3 * H + j]);
        c[j] = f * c[j] + i * g;
        h[j] = o * std::tanh(c[j]);
      }
      out.push_back(h);
    }
    seq = out;
  }
  double y = p[pos + H];
  for (int j = 0; j < H; ++j) y += p[pos + j] * seq.back()[j];
  return y;
}

}  // namespace lstm_oracle
