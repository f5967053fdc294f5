#include "spdcsim/photostats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace spdcsim::photostats {

void SourceRate::validate() const {
  if (!(brightness_per_s_mw_mhz >= 0.0) || !(power_mw >= 0.0) || !(bandwidth_mhz >= 0.0)) {
    throw std::invalid_argument("source rate fields must be non-negative");
  }
}

void DetectionChain::validate() const {
  auto fraction = [](double eta, const char* field) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
      throw std::invalid_argument(std::string(field) + " must lie in [0,1]");
    }
  };
  fraction(eta_s, "eta_s");
  fraction(eta_i, "eta_i");
  if (!(dark_s_hz >= 0.0) || !(dark_i_hz >= 0.0)) {
    throw std::invalid_argument("dark rates must be non-negative");
  }
  if (!(window_ns > 0.0)) throw std::invalid_argument("window_ns must be positive");
  if (!(bin_ps > 0.0)) throw std::invalid_argument("bin_ps must be positive");
  if (!(jitter_ps >= 0.0)) throw std::invalid_argument("jitter_ps must be non-negative");
}

double DetectionChain::timestamp_jitter_ps() const { return jitter_ps / std::numbers::sqrt2; }

double pair_rate(const SourceRate& src) {
  src.validate();
  return src.brightness_per_s_mw_mhz * src.power_mw * src.bandwidth_mhz;
}

double car_model(double rate_per_s, const DetectionChain& chain) {
  if (!(rate_per_s >= 0.0)) throw std::domain_error("pair rate must be non-negative");
  chain.validate();
  const double window_s = chain.window_ns * 1e-9;
  const double coincident = chain.eta_s * chain.eta_i * rate_per_s;
  const double accidental = (chain.eta_s * rate_per_s + chain.dark_s_hz) *
                            (chain.eta_i * rate_per_s + chain.dark_i_hz) * window_s;
  if (accidental == 0.0) throw NoAccidentals();
  return coincident / accidental;
}

double car_optimal_rate(const DetectionChain& chain) {
  chain.validate();
  if (!(chain.dark_s_hz > 0.0 && chain.dark_i_hz > 0.0)) {
    throw std::domain_error("CAR has no interior maximum");
  }
  if (!(chain.eta_s > 0.0 && chain.eta_i > 0.0)) {
    throw std::domain_error("CAR has no interior maximum");
  }
  return std::sqrt(chain.dark_s_hz * chain.dark_i_hz / (chain.eta_s * chain.eta_i));
}

bool TimeTagStream::is_sorted() const {
  return std::is_sorted(events.begin(), events.end(),
                        [](const TimeTag& a, const TimeTag& b) { return a.timestamp_ps < b.timestamp_ps; });
}

std::size_t TimeTagStream::count(std::uint8_t channel) const {
  return static_cast<std::size_t>(std::count_if(
      events.begin(), events.end(), [channel](const TimeTag& e) { return e.channel == channel; }));
}

TimeTagStream simulate_timetags(const SourceRate& src, const biphoton::BiphotonParams& bp,
                                const DetectionChain& chain, double duration_s,
                                std::uint64_t seed) {
  if (!(duration_s > 0.0)) throw std::domain_error("duration must be positive");
  chain.validate();
  const double rate = pair_rate(src);
  const double decay_per_ps = 2.0 * std::numbers::pi * biphoton::gamma_prime(bp) * 1e-3 * 1e-3;
  const double duration_ps = duration_s * 1e12;
  const double sigma_ps = chain.timestamp_jitter_ps();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 1.0);

  std::vector<TimeTag> events;
  auto emit = [&](double t_ps, std::uint8_t channel) {
    if (sigma_ps > 0.0) t_ps += sigma_ps * jitter(rng);
    const double rounded = std::round(t_ps);
    if (rounded < 0.0 || rounded > duration_ps) return;
    events.push_back({static_cast<std::uint64_t>(rounded), channel});
  };

  if (rate > 0.0) {
    std::exponential_distribution<double> gap(rate * 1e-12);
    std::exponential_distribution<double> delay(decay_per_ps);
    for (double t = gap(rng); t < duration_ps; t += gap(rng)) {
      // Two-sided exponential delay: density (pi gamma') exp(-2 pi gamma' |dt|).
      const double magnitude = delay(rng);
      const double dt = uniform(rng) < 0.5 ? -magnitude : magnitude;
      if (uniform(rng) < chain.eta_s) emit(t, 0);
      if (uniform(rng) < chain.eta_i) emit(t + dt, 1);
    }
  }

  const double darks[2] = {chain.dark_s_hz, chain.dark_i_hz};
  for (std::uint8_t ch = 0; ch < 2; ++ch) {
    if (darks[ch] <= 0.0) continue;
    std::exponential_distribution<double> gap(darks[ch] * 1e-12);
    for (double t = gap(rng); t < duration_ps; t += gap(rng)) {
      events.push_back({static_cast<std::uint64_t>(std::round(t)), ch});
    }
  }

  std::stable_sort(events.begin(), events.end(), [](const TimeTag& a, const TimeTag& b) {
    return a.timestamp_ps < b.timestamp_ps || (a.timestamp_ps == b.timestamp_ps && a.channel < b.channel);
  });
  return TimeTagStream{std::move(events)};
}

double DelayHistogram::center_ps(std::size_t i) const {
  return static_cast<double>((static_cast<std::int64_t>(i) - half_bins) * bin_ps);
}

std::uint64_t DelayHistogram::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

std::string DelayHistogram::to_csv() const {
  std::ostringstream out;
  out << "bin_center_ps,counts\n";
  for (std::size_t i = 0; i < counts.size(); ++i) out << center_ps(i) << ',' << counts[i] << '\n';
  return out.str();
}

namespace {

struct SplitChannels {
  std::vector<std::int64_t> ch0;
  std::vector<std::int64_t> ch1;
};

SplitChannels split_channels(const TimeTagStream& stream) {
  if (!stream.is_sorted()) throw std::invalid_argument("time-tag stream is not sorted");
  SplitChannels split;
  for (const auto& e : stream.events) {
    if (e.channel > 1) throw std::invalid_argument("time-tag channel must be 0 or 1");
    (e.channel == 0 ? split.ch0 : split.ch1).push_back(static_cast<std::int64_t>(e.timestamp_ps));
  }
  return split;
}

// Calls visit(dt) for each cross-channel delay dt = t1 - t0 in [lo, hi].
template <class Visit>
void for_each_delay(const SplitChannels& split, std::int64_t lo, std::int64_t hi, Visit&& visit) {
  std::size_t first = 0;
  for (std::int64_t t0 : split.ch0) {
    while (first < split.ch1.size() && split.ch1[first] - t0 < lo) ++first;
    for (std::size_t j = first; j < split.ch1.size(); ++j) {
      const std::int64_t dt = split.ch1[j] - t0;
      if (dt > hi) break;
      visit(dt);
    }
  }
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

DelayHistogram coincidence_histogram(const TimeTagStream& stream, double range_ns, double bin_ps) {
  if (!(range_ns > 0.0) || !(bin_ps > 0.0)) {
    throw std::invalid_argument("histogram range and bin must be positive");
  }
  const auto range = static_cast<std::int64_t>(std::llround(range_ns * 1e3));
  const auto bin = static_cast<std::int64_t>(std::llround(bin_ps));
  if (bin <= 0 || std::abs(bin_ps - static_cast<double>(bin)) > 1e-9 ||
      std::abs(range_ns * 1e3 - static_cast<double>(range)) > 1e-6 || range % bin != 0) {
    throw std::invalid_argument("bin width must divide the histogram range");
  }

  DelayHistogram hist;
  hist.bin_ps = bin;
  hist.half_bins = range / (2 * bin);
  hist.counts.assign(static_cast<std::size_t>(2 * hist.half_bins + 1), 0);

  const SplitChannels split = split_channels(stream);
  // Bin edges sit at (k +- 1/2) * bin; work in doubled units to stay integral.
  const std::int64_t span2 = (2 * hist.half_bins + 1) * bin;
  const std::int64_t lo = floor_div(-span2, 2);
  const std::int64_t hi = floor_div(span2 - 1, 2);
  for_each_delay(split, lo, hi, [&](std::int64_t dt) {
    const std::int64_t idx = floor_div(2 * dt + span2, 2 * bin);
    if (idx >= 0 && idx < static_cast<std::int64_t>(hist.counts.size())) {
      ++hist.counts[static_cast<std::size_t>(idx)];
    }
  });
  return hist;
}

CarMeasurement car_from_stream(const TimeTagStream& stream, const DetectionChain& chain,
                               double accidental_offset_ns, int n_accidental_windows) {
  if (stream.events.empty()) throw std::invalid_argument("empty time-tag stream");
  chain.validate();
  if (n_accidental_windows < 1) throw std::invalid_argument("need at least one accidental window");
  if (!(accidental_offset_ns > chain.window_ns)) {
    throw std::invalid_argument("accidental offset must exceed the coincidence window");
  }

  const SplitChannels split = split_channels(stream);
  const double half_window = 0.5 * chain.window_ns * 1e3;
  const double offset = accidental_offset_ns * 1e3;
  const auto lo = static_cast<std::int64_t>(std::floor(-half_window));
  const auto hi = static_cast<std::int64_t>(std::ceil(n_accidental_windows * offset + half_window));

  CarMeasurement m;
  m.accidental_windows = n_accidental_windows;
  for_each_delay(split, lo, hi, [&](std::int64_t dt_int) {
    const auto dt = static_cast<double>(dt_int);
    const double k = std::round(dt / offset);
    if (std::abs(dt - k * offset) > half_window) return;
    if (k == 0.0) {
      ++m.coincidences;
    } else if (k >= 1.0 && k <= n_accidental_windows) {
      ++m.accidental_total;
    }
  });

  m.accidentals = static_cast<double>(m.accidental_total) / n_accidental_windows;
  if (m.accidental_total == 0) {
    m.car = std::numeric_limits<double>::infinity();
    m.car_sigma = std::numeric_limits<double>::infinity();
  } else {
    m.car = static_cast<double>(m.coincidences) / m.accidentals;
    const double rel2 = (m.coincidences > 0 ? 1.0 / static_cast<double>(m.coincidences) : 0.0) +
                        1.0 / static_cast<double>(m.accidental_total);
    m.car_sigma = m.car * std::sqrt(rel2);
  }
  return m;
}

}  // namespace spdcsim::photostats
