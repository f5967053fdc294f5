#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdcsim/biphoton.hpp"

namespace spdcsim::photostats {

struct SourceRate {
  double brightness_per_s_mw_mhz = 0.7;
  double power_mw = 150.0;
  double bandwidth_mhz = 458.0;

  void validate() const;
};

/// Detection settings shared by both arms.
///
/// `jitter_ps` is the standard deviation of the measured signal-idler delay
/// (both detectors plus the tagger). Each timestamp receives jitter_ps / sqrt(2).
struct DetectionChain {
  double eta_s = 0.125;
  double eta_i = 0.125;
  double dark_s_hz = 100.0;
  double dark_i_hz = 100.0;
  double window_ns = 3.2;
  double jitter_ps = 60.0;
  double bin_ps = 25.0;

  void validate() const;
  double timestamp_jitter_ps() const;
};

/// Raised by car_model when neither darks nor pairs produce accidentals.
class NoAccidentals : public std::domain_error {
 public:
  NoAccidentals() : std::domain_error("no accidentals: CAR undefined") {}
};

/// Pair emission rate (pairs/s) = brightness * power * bandwidth.
double pair_rate(const SourceRate& src);

/// Coincidence-to-accidental ratio for a CW source with dark counts and
/// multi-pair accidentals.
double car_model(double rate_per_s, const DetectionChain& chain);

/// Pair rate maximizing car_model: sqrt(dark_s dark_i / (eta_s eta_i)).
double car_optimal_rate(const DetectionChain& chain);

struct TimeTag {
  std::uint64_t timestamp_ps = 0;
  std::uint8_t channel = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

struct TimeTagStream {
  std::vector<TimeTag> events;

  bool is_sorted() const;
  std::size_t count(std::uint8_t channel) const;
};

/// Monte Carlo detection record for `duration_s` seconds of CW pumping.
/// Channel 0 carries the signal arm, channel 1 the idler arm.
TimeTagStream simulate_timetags(const SourceRate& src, const biphoton::BiphotonParams& bp,
                                const DetectionChain& chain, double duration_s,
                                std::uint64_t seed);

/// Histogram of t_ch1 - t_ch0. Bin i is centered at (i - half_bins) * bin_ps.
struct DelayHistogram {
  std::int64_t bin_ps = 0;
  std::int64_t half_bins = 0;
  std::vector<std::uint64_t> counts;

  double center_ps(std::size_t i) const;
  std::uint64_t total() const;
  /// CSV with header `bin_center_ps,counts`.
  std::string to_csv() const;
};

/// Cross-channel delays with |dt| within `range_ns`/2, binned at `bin_ps`.
/// Throws std::invalid_argument on an unsorted stream or a bin that does not
/// divide the range.
DelayHistogram coincidence_histogram(const TimeTagStream& stream, double range_ns, double bin_ps);

struct CarMeasurement {
  std::uint64_t coincidences = 0;
  double accidentals = 0.0;  // mean per delayed window
  std::uint64_t accidental_total = 0;
  int accidental_windows = 0;
  double car = 0.0;          // +inf when no accidentals were seen
  double car_sigma = 0.0;    // Poisson error
};

/// Delayed-window CAR. Accidentals are averaged over windows centered at
/// k * accidental_offset_ns for k = 1..n_accidental_windows.
CarMeasurement car_from_stream(const TimeTagStream& stream, const DetectionChain& chain,
                               double accidental_offset_ns, int n_accidental_windows = 1);

}  // namespace spdcsim::photostats
