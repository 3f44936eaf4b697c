#include "wrsn/isac.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include "wrsn/text_format.hpp"

namespace wrsn {

double Waveform::energy() const {
  return std::inner_product(samples.begin(), samples.end(), samples.begin(), 0.0);
}

double Correlation::at(long lag) const {
  if (lag < first_lag || lag > last_lag()) throw std::out_of_range("correlation lag out of range");
  return values[static_cast<std::size_t>(lag - first_lag)];
}

Waveform synth_waveform(double sample_rate, double duration, double f0, double f1) {
  if (!(duration > 0.0)) throw std::invalid_argument("synth_waveform: duration must be positive");
  if (f0 < 0.0 || f1 < 0.0) throw std::invalid_argument("synth_waveform: negative frequency");
  if (!(sample_rate > 2.0 * std::max(f0, f1)))
    throw std::invalid_argument("synth_waveform: sample rate below Nyquist for the sweep");
  const double count = std::round(duration * sample_rate);
  if (count < 8.0) throw std::invalid_argument("synth_waveform: fewer than 8 samples");

  Waveform w;
  w.sample_rate = sample_rate;
  w.duration = duration;
  w.start_frequency = f0;
  w.stop_frequency = f1;
  const auto n = static_cast<std::size_t>(count);
  w.samples.resize(n);
  const double sweep = (f1 - f0) / duration;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / sample_rate;
    w.samples[k] = std::cos(2.0 * std::numbers::pi * (f0 * t + 0.5 * sweep * t * t));
  }
  return w;
}

EchoTrace simulate_echo(const Waveform& w, double true_delay, double snr_db,
                        std::uint64_t noise_seed, std::size_t listen_samples) {
  if (true_delay < 0.0) throw std::invalid_argument("simulate_echo: negative delay");
  if (w.samples.empty()) throw std::invalid_argument("simulate_echo: empty waveform");
  EchoTrace trace;
  trace.true_delay = true_delay;
  trace.snr_db = snr_db;
  trace.noise_seed = noise_seed;
  trace.delay_samples = static_cast<std::size_t>(std::llround(true_delay * w.sample_rate));

  trace.received.assign(w.samples.size() + trace.delay_samples + listen_samples, 0.0);
  std::copy(w.samples.begin(), w.samples.end(), trace.received.begin() + trace.delay_samples);

  if (!(std::isinf(snr_db) && snr_db > 0.0)) {
    const double signal_power = w.energy() / static_cast<double>(w.samples.size());
    const double sigma = std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& v : trace.received) v += noise(rng);
  }
  return trace;
}

namespace {

double correlate_at(std::span<const double> x, std::span<const double> s, long lag) {
  // y[lag] = sum_n x[n] s[n - lag], over n where both indices are valid.
  const long nx = static_cast<long>(x.size());
  const long ns = static_cast<long>(s.size());
  const long n_begin = std::max(0L, lag);
  const long n_end = std::min(nx, lag + ns);
  // Independent partial sums keep the adder pipeline full.
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  long n = n_begin;
  for (; n + 4 <= n_end; n += 4) {
    acc[0] += x[n] * s[n - lag];
    acc[1] += x[n + 1] * s[n + 1 - lag];
    acc[2] += x[n + 2] * s[n + 2 - lag];
    acc[3] += x[n + 3] * s[n + 3 - lag];
  }
  for (; n < n_end; ++n) acc[0] += x[n] * s[n - lag];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace

Correlation matched_filter(std::span<const double> x, std::span<const double> s) {
  if (x.empty() || s.empty()) throw std::invalid_argument("matched_filter: empty input");
  Correlation y;
  y.first_lag = -(static_cast<long>(s.size()) - 1);
  y.values.resize(x.size() + s.size() - 1);
  for (std::size_t i = 0; i < y.values.size(); ++i)
    y.values[i] = correlate_at(x, s, y.first_lag + static_cast<long>(i));
  return y;
}

Correlation matched_filter(const EchoTrace& x, const Waveform& s) {
  return matched_filter(x.received, s.samples);
}

Correlation matched_filter_causal(std::span<const double> x, std::span<const double> s,
                                  std::size_t max_lag) {
  if (x.empty() || s.empty()) throw std::invalid_argument("matched_filter: empty input");
  Correlation y;
  y.first_lag = 0;
  const std::size_t lags = std::min(max_lag, x.size() - 1) + 1;
  y.values.resize(lags);
  for (std::size_t k = 0; k < lags; ++k) y.values[k] = correlate_at(x, s, static_cast<long>(k));
  return y;
}

namespace {

bool smooth_size(std::size_t n) {
  for (std::size_t f : {2u, 3u, 5u})
    while (n % f == 0) n /= f;
  return n == 1;
}

}  // namespace

struct FftMatchedFilter::Buffers {
  double* time = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_complex* template_spectrum = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  ~Buffers() {
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
    fftw_free(time);
    fftw_free(spectrum);
    fftw_free(template_spectrum);
  }
};

FftMatchedFilter::FftMatchedFilter(std::span<const double> s, std::size_t max_lag)
    : template_size_(s.size()), max_lag_(max_lag), buf_(std::make_unique<Buffers>()) {
  if (s.empty()) throw std::invalid_argument("FftMatchedFilter: empty template");
  // Circular wrap-around stays clear of lags 0..max_lag once n >= len(s) + max_lag.
  n_ = s.size() + max_lag;
  while (!smooth_size(n_)) ++n_;
  const std::size_t bins = n_ / 2 + 1;
  buf_->time = fftw_alloc_real(n_);
  buf_->spectrum = fftw_alloc_complex(bins);
  buf_->template_spectrum = fftw_alloc_complex(bins);
  if (!buf_->time || !buf_->spectrum || !buf_->template_spectrum) throw std::bad_alloc();
  // FFTW_ESTIMATE picks the same algorithm on every run, which keeps results reproducible.
  const int n = static_cast<int>(n_);
  buf_->forward = fftw_plan_dft_r2c_1d(n, buf_->time, buf_->spectrum, FFTW_ESTIMATE);
  buf_->inverse = fftw_plan_dft_c2r_1d(n, buf_->spectrum, buf_->time, FFTW_ESTIMATE);
  if (!buf_->forward || !buf_->inverse) throw std::runtime_error("FftMatchedFilter: planning failed");

  std::fill(buf_->time, buf_->time + n_, 0.0);
  std::copy(s.begin(), s.end(), buf_->time);
  fftw_execute(buf_->forward);
  std::memcpy(buf_->template_spectrum, buf_->spectrum, bins * sizeof(fftw_complex));
}

FftMatchedFilter::~FftMatchedFilter() = default;

Correlation FftMatchedFilter::causal(std::span<const double> x) const {
  if (x.empty()) throw std::invalid_argument("matched_filter: empty input");
  if (x.size() > template_size_ + max_lag_)
    throw std::invalid_argument("FftMatchedFilter: input longer than planned");
  auto& b = *buf_;
  std::fill(b.time, b.time + n_, 0.0);
  std::copy(x.begin(), x.end(), b.time);
  fftw_execute(b.forward);
  const std::size_t bins = n_ / 2 + 1;
  for (std::size_t k = 0; k < bins; ++k) {
    // X * conj(S)
    const double xr = b.spectrum[k][0], xi = b.spectrum[k][1];
    const double sr = b.template_spectrum[k][0], si = b.template_spectrum[k][1];
    b.spectrum[k][0] = xr * sr + xi * si;
    b.spectrum[k][1] = xi * sr - xr * si;
  }
  fftw_execute(b.inverse);

  Correlation y;
  y.first_lag = 0;
  const std::size_t lags = std::min(max_lag_, x.size() - 1) + 1;
  y.values.resize(lags);
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t k = 0; k < lags; ++k) y.values[k] = b.time[k] * scale;
  return y;
}

double estimate_delay(const Correlation& y, double sample_rate) {
  if (y.values.empty()) throw std::invalid_argument("estimate_delay: empty correlation");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("estimate_delay: sample rate must be positive");
  if (y.last_lag() < 0) throw NoSignalError();
  const long start = std::max(0L, y.first_lag);
  long best_lag = start;
  double best = y.at(start);
  bool any = best != 0.0;
  for (long lag = start + 1; lag <= y.last_lag(); ++lag) {
    const double v = y.at(lag);
    any = any || v != 0.0;
    if (v > best) {
      best = v;
      best_lag = lag;
    }
  }
  if (!any) throw NoSignalError();
  return static_cast<double>(best_lag) / sample_rate;
}

double estimate_distance(double tau) {
  if (tau < 0.0) throw std::invalid_argument("estimate_distance: negative delay");
  return kSpeedOfLight * tau / 2.0;
}

double range_quantum(double sample_rate) { return kSpeedOfLight / (2.0 * sample_rate); }

IsacDetector::IsacDetector(IsacConfig cfg)
    : cfg_(cfg),
      waveform_(synth_waveform(cfg.sample_rate, cfg.pulse_duration, cfg.start_frequency,
                               cfg.stop_frequency)),
      filters_(std::make_shared<std::map<std::size_t, std::unique_ptr<FftMatchedFilter>>>()) {}

const FftMatchedFilter& IsacDetector::filter_for(std::size_t max_lag) const {
  auto& slot = (*filters_)[max_lag];
  if (!slot) slot = std::make_unique<FftMatchedFilter>(waveform_.samples, max_lag);
  return *slot;
}

DetectionResult IsacDetector::detect(double true_distance, double sensing_range,
                                     std::uint64_t noise_seed) const {
  if (true_distance < 0.0) throw std::invalid_argument("detect: negative distance");
  const double true_delay = 2.0 * true_distance / kSpeedOfLight;
  const auto echo_lag = static_cast<std::size_t>(std::llround(true_delay * cfg_.sample_rate));
  // The node listens over lags covering 1.5 R_s, or further if the echo lies beyond.
  const auto window_lag = static_cast<std::size_t>(
      std::ceil(2.0 * 1.5 * sensing_range / kSpeedOfLight * cfg_.sample_rate));
  const std::size_t max_lag = std::max(echo_lag, window_lag);
  const auto trace = simulate_echo(waveform_, true_delay, cfg_.snr_db, noise_seed, max_lag - echo_lag);
  const auto y = filter_for(max_lag).causal(trace.received);

  DetectionResult r;
  r.estimated_delay = estimate_delay(y, cfg_.sample_rate);
  r.estimated_distance = estimate_distance(r.estimated_delay);
  r.correlation_peak = y.at(std::lround(r.estimated_delay * cfg_.sample_rate));
  r.detected = r.estimated_distance <= sensing_range + 0.5 * range_quantum(cfg_.sample_rate);
  return r;
}

DetectionResult detect_mcv(const SensorNode& node, Point mcv_position, const Network& net,
                           const IsacConfig& cfg, std::uint64_t noise_seed) {
  return IsacDetector(cfg).detect(euclidean_distance(node.position, mcv_position),
                                  net.sensing_range(), noise_seed);
}

void write_correlation_csv(std::ostream& out, const Correlation& y) {
  out << "lag,value\n";
  for (std::size_t i = 0; i < y.values.size(); ++i)
    out << y.first_lag + static_cast<long>(i) << ',' << format_double(y.values[i]) << '\n';
}

}  // namespace wrsn
