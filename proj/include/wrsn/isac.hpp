#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "wrsn/geometry.hpp"
#include "wrsn/network.hpp"

namespace wrsn {

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s

/// Sampled linear chirp, unit peak amplitude.
struct Waveform {
  std::vector<double> samples;
  double sample_rate = 0.0;  // Hz
  double duration = 0.0;     // s
  double start_frequency = 0.0;
  double stop_frequency = 0.0;

  double energy() const;
};

struct EchoTrace {
  std::vector<double> received;
  double true_delay = 0.0;   // s, ground truth
  std::size_t delay_samples = 0;
  double snr_db = 0.0;
  std::uint64_t noise_seed = 0;
};

/// Cross-correlation y[k] = sum_n x[n] s[n - k] sampled over a contiguous
/// lag range starting at `first_lag`: values[i] holds lag first_lag + i.
struct Correlation {
  std::vector<double> values;
  long first_lag = 0;

  long last_lag() const { return first_lag + static_cast<long>(values.size()) - 1; }
  double at(long lag) const;
};

struct DetectionResult {
  double estimated_delay = 0.0;     // s
  double estimated_distance = 0.0;  // m
  bool detected = false;
  double correlation_peak = 0.0;
};

class NoSignalError : public std::runtime_error {
 public:
  NoSignalError() : std::runtime_error("no signal detected") {}
};

struct IsacConfig {
  double sample_rate = 1e9;
  double pulse_duration = 1e-6;
  double start_frequency = 10e6;
  double stop_frequency = 100e6;
  double snr_db = 10.0;  // +inf disables noise
};

Waveform synth_waveform(double sample_rate, double duration, double f0, double f1);

/// x = s delayed by round(true_delay * fs) samples plus white Gaussian noise
/// at the given per-sample SNR. `listen_samples` extends the window past the
/// end of the delayed echo.
EchoTrace simulate_echo(const Waveform& w, double true_delay, double snr_db,
                        std::uint64_t noise_seed, std::size_t listen_samples = 0);

/// Full correlation, lags -(len(s)-1) .. len(x)-1 (length len(x)+len(s)-1).
Correlation matched_filter(std::span<const double> x, std::span<const double> s);
Correlation matched_filter(const EchoTrace& x, const Waveform& s);
/// Correlation restricted to lags 0 .. max_lag.
Correlation matched_filter_causal(std::span<const double> x, std::span<const double> s,
                                  std::size_t max_lag);

/// Same values as matched_filter_causal (to rounding) computed by FFT for a
/// fixed template and lag range. Inputs may be at most len(s) + max_lag long.
class FftMatchedFilter {
 public:
  FftMatchedFilter(std::span<const double> s, std::size_t max_lag);
  ~FftMatchedFilter();
  FftMatchedFilter(const FftMatchedFilter&) = delete;
  FftMatchedFilter& operator=(const FftMatchedFilter&) = delete;

  std::size_t max_lag() const { return max_lag_; }
  std::size_t transform_size() const { return n_; }
  Correlation causal(std::span<const double> x) const;

 private:
  struct Buffers;
  std::size_t template_size_;
  std::size_t max_lag_;
  std::size_t n_;
  std::unique_ptr<Buffers> buf_;
};

/// argmax over non-negative lags divided by the sample rate; ties go to the
/// smallest lag. Throws NoSignalError when those lags are all zero.
double estimate_delay(const Correlation& y, double sample_rate);

/// Two-way range: d = c * tau / 2.
double estimate_distance(double tau);

/// Range covered by one sample of delay, c / (2 fs).
double range_quantum(double sample_rate);

/// Echo ranging of a charger from a sensor node.
///
/// The echo delay is synthesized from the true geometric distance, recovered
/// with the matched filter and converted back to a range. The charger counts
/// as inside the sensing region when the estimate is within R_s on the
/// sample grid: estimate <= R_s + range_quantum / 2.
class IsacDetector {
 public:
  explicit IsacDetector(IsacConfig cfg = {});

  const IsacConfig& config() const { return cfg_; }
  const Waveform& waveform() const { return waveform_; }

  DetectionResult detect(double true_distance, double sensing_range, std::uint64_t noise_seed) const;

 private:
  const FftMatchedFilter& filter_for(std::size_t max_lag) const;

  IsacConfig cfg_;
  Waveform waveform_;
  // Shared so copies of a detector reuse the transforms; not thread safe.
  std::shared_ptr<std::map<std::size_t, std::unique_ptr<FftMatchedFilter>>> filters_;
};

DetectionResult detect_mcv(const SensorNode& node, Point mcv_position, const Network& net,
                           const IsacConfig& cfg, std::uint64_t noise_seed);

/// `lag,value` CSV with a header row.
void write_correlation_csv(std::ostream& out, const Correlation& y);

}  // namespace wrsn
