#include "iaqm/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "iaqm/rng.hpp"

namespace iaqm::predictor {

SupervisedWindows SupervisedWindows::slice(Eigen::Index begin, Eigen::Index end) const {
  SupervisedWindows out;
  out.x = x.middleRows(begin, end - begin);
  out.y = y.segment(begin, end - begin);
  return out;
}

SupervisedWindows build_windows(std::span<const double> series, int steps) {
  if (steps < 1) throw std::invalid_argument("window steps must be >= 1");
  if (series.size() < static_cast<size_t>(steps) + 1) {
    throw std::invalid_argument("series of length " + std::to_string(series.size()) +
                                " has no complete window of " + std::to_string(steps) +
                                " steps plus a target");
  }
  const auto rows = static_cast<Eigen::Index>(series.size()) - steps;
  SupervisedWindows w;
  w.x.resize(rows, steps);
  w.y.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int c = 0; c < steps; ++c) w.x(r, c) = series[r + c];
    w.y(r) = series[r + steps];
  }
  return w;
}

MinMaxScaler MinMaxScaler::fit(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("cannot fit scaler on empty data");
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return MinMaxScaler{*lo, *hi};
}

std::vector<double> MinMaxScaler::apply(std::span<const double> values) const {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [this](double v) { return apply(v); });
  return out;
}

std::vector<double> MinMaxScaler::invert(std::span<const double> values) const {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [this](double v) { return invert(v); });
  return out;
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.empty()) throw std::invalid_argument("error metric on empty vectors");
  if (a.size() != b.size()) {
    throw std::invalid_argument("error metric length mismatch: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
}

}  // namespace

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted);
  double s = 0.0;
  for (size_t i = 0; i < actual.size(); ++i) {
    const double d = actual[i] - predicted[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(actual.size()));
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted);
  double s = 0.0;
  for (size_t i = 0; i < actual.size(); ++i) s += std::abs(actual[i] - predicted[i]);
  return s / static_cast<double>(actual.size());
}

namespace {

int64_t parse_int(std::string_view field, size_t line_no) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw std::runtime_error("trace line " + std::to_string(line_no) + ": '" +
                             std::string(field) + "' is not an integer");
  }
  return v;
}

}  // namespace

EceSeries read_trace_csv(std::istream& in, sim::SimTime interval_width) {
  EceSeries s;
  s.interval_width = interval_width;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw std::runtime_error("trace line " + std::to_string(line_no) +
                               ": expected 'interval_index,ece_count'");
    }
    const std::string_view view(line);
    const int64_t index = parse_int(view.substr(0, comma), line_no);
    const int64_t count = parse_int(view.substr(comma + 1), line_no);
    if (index != static_cast<int64_t>(s.counts.size())) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": interval index " +
                               std::to_string(index) + " out of order, expected " +
                               std::to_string(s.counts.size()));
    }
    if (count < 0) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": negative count");
    }
    s.counts.push_back(count);
  }
  return s;
}

EceSeries read_trace_csv(const std::filesystem::path& path, sim::SimTime interval_width) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path.string());
  return read_trace_csv(in, interval_width);
}

void write_trace_csv(std::ostream& out, const EceSeries& series) {
  for (size_t i = 0; i < series.counts.size(); ++i) out << i << ',' << series.counts[i] << '\n';
}

EceSeries synth_trace(uint64_t seed, size_t length, const SynthParams& params,
                      sim::SimTime interval_width) {
  if (params.p_on < 0.0 || params.p_on > 1.0) throw std::invalid_argument("p_on must be in [0,1]");
  if (params.mean_on_run < 1.0) throw std::invalid_argument("mean_on_run must be >= 1");
  if (params.lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");

  sim::RandomStream rng(seed, "synth_trace");
  const double on_to_off = 1.0 / params.mean_on_run;
  const double off_to_on =
      params.p_on >= 1.0 ? 1.0 : std::min(1.0, on_to_off * params.p_on / (1.0 - params.p_on));

  EceSeries s;
  s.interval_width = interval_width;
  s.counts.reserve(length);
  bool on = params.p_on > 0.0 && rng.bernoulli(params.p_on);
  for (size_t i = 0; i < length; ++i) {
    s.counts.push_back(on ? rng.poisson(params.lambda) : 0);
    if (params.p_on <= 0.0 || params.p_on >= 1.0) continue;
    on = on ? !rng.bernoulli(on_to_off) : rng.bernoulli(off_to_on);
  }
  return s;
}

}  // namespace iaqm::predictor
