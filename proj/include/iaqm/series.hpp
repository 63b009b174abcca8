#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "iaqm/sim_time.hpp"

namespace iaqm::predictor {

/// ECE-marked packet counts per fixed-width interval, oldest first.
struct EceSeries {
  sim::SimTime interval_width = sim::SimTime::FromMillis(100);
  std::vector<int64_t> counts;

  size_t size() const { return counts.size(); }
  std::vector<double> as_double() const { return {counts.begin(), counts.end()}; }
};

/// Row r of x is series[r .. r+steps-1]; y[r] is series[r+steps].
struct SupervisedWindows {
  Eigen::MatrixXd x;  // rows x steps
  Eigen::VectorXd y;  // rows

  Eigen::Index rows() const { return x.rows(); }
  int steps() const { return static_cast<int>(x.cols()); }
  /// Rows [begin, end) as a new set.
  SupervisedWindows slice(Eigen::Index begin, Eigen::Index end) const;
};

/// Throws std::invalid_argument when series.size() < steps + 1.
SupervisedWindows build_windows(std::span<const double> series, int steps = 10);

/// Min-max scaling with bounds fixed at fit time. Values outside the fitted
/// range map outside [0, 1] and are not clipped. Equal bounds map to 0.
struct MinMaxScaler {
  double min = 0.0;
  double max = 1.0;

  static MinMaxScaler fit(std::span<const double> values);
  double apply(double v) const { return max > min ? (v - min) / (max - min) : 0.0; }
  double invert(double v) const { return max > min ? min + v * (max - min) : min; }
  std::vector<double> apply(std::span<const double> values) const;
  std::vector<double> invert(std::span<const double> values) const;
};

/// Root mean squared error. Throws on empty input or length mismatch.
double rmse(std::span<const double> actual, std::span<const double> predicted);
double mae(std::span<const double> actual, std::span<const double> predicted);

/// Reads the two-column trace CSV ("interval_index,ece_count", no header,
/// indices consecutive from 0). Throws std::runtime_error naming the line on
/// malformed input.
EceSeries read_trace_csv(std::istream& in, sim::SimTime interval_width = sim::SimTime::FromMillis(100));
EceSeries read_trace_csv(const std::filesystem::path& path,
                         sim::SimTime interval_width = sim::SimTime::FromMillis(100));
void write_trace_csv(std::ostream& out, const EceSeries& series);

/// ON/OFF Markov-modulated Poisson source. OFF intervals emit 0, ON intervals
/// emit Poisson(lambda). p_on is the stationary probability of ON and
/// mean_on_run the expected length of an ON run in intervals.
struct SynthParams {
  double p_on = 0.4;
  double mean_on_run = 20.0;
  double lambda = 20.0;
};

EceSeries synth_trace(uint64_t seed, size_t length, const SynthParams& params = {},
                      sim::SimTime interval_width = sim::SimTime::FromMillis(100));

}  // namespace iaqm::predictor
