#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "respira/dsp.hpp"

namespace respira::ecg {

inline constexpr int kMorphologyFields = 10;
inline constexpr int kFeatureDim = 2 * kMorphologyFields;  // mean + std per field

struct BeatFiducials {
  int q_idx = -1, r_idx = -1, s_idx = -1, t_idx = -1;
};

struct BeatMorphology {
  double r_mag = 0, r_prom = 0, r_width_ms = 0;
  double t_mag = 0, t_width_ms = 0;
  double qs_dist_ms = 0, st_dist_ms = 0;
  double bpm = 0;
  double r_power = 0, t_power = 0;  // triangle areas, mV*s

  std::array<double, kMorphologyFields> as_array() const {
    return {r_mag, r_prom,    r_width_ms, t_mag,   t_width_ms,
            qs_dist_ms, st_dist_ms, bpm,   r_power, t_power};
  }
};

// Field-major layout: [f1_mean, f1_std, f2_mean, f2_std, ...].
const std::vector<std::string>& feature_names();

struct Config {
  double win_s = 15.0, step_s = 3.0;
  int median_k = 5;
  double band_lo_hz = 5.0, band_hi_hz = 25.0;
  double peak_threshold = 0.7;    // fraction of the window max
  double lockout_ms = 200.0;
  double repair_threshold = 0.5;  // lowered fraction when re-searching gaps
  double q_search_ms = 100.0, s_search_ms = 100.0, t_search_ms = 500.0;
  int min_beats = 3;
};

// median -> detrend -> 5-25 Hz band-pass on the lead-1 channel.
std::vector<double> preprocess(const dsp::Window& win, const Config& cfg = {});

// R peaks above threshold with the lockout applied, sorted ascending.
// Throws NoBeatsFound when fewer than cfg.min_beats peaks survive.
std::vector<int> detect_r_peaks(const std::vector<double>& x, double rate_hz,
                                const Config& cfg = {});

// Gap/duplicate repair against the window-mean RR: gaps > 1.2x mean are
// re-searched at the lowered threshold, gaps < 0.8x mean drop the smaller
// peak. Best-effort; never throws.
std::vector<int> correct_missed_peaks(std::vector<int> r,
                                      const std::vector<double>& x,
                                      double rate_hz, const Config& cfg = {});

// Q/S minima and T maximum in the paper's search segments around r_idx; the
// T search is additionally bounded away from the following beat. Throws
// SegmentOutOfBounds when a segment does not fit in the window.
BeatFiducials locate_qst(int r_idx, const std::vector<double>& x, double rate_hz,
                         const Config& cfg = {}, int next_r_idx = -1);

// Morphology of one beat; rr_ms is the interval to the next detected beat.
BeatMorphology beat_morphology(const BeatFiducials& f, const std::vector<double>& x,
                               double rate_hz, double rr_ms);

struct WindowFeatures {
  std::int64_t t_center_ms = 0;
  std::vector<double> values;  // kFeatureDim
  int n_beats = 0;
};

// Full per-window pipeline: preprocess, detect, repair, locate, summarize.
// Returns nullopt when fewer than cfg.min_beats usable beats exist.
std::optional<WindowFeatures> window_ecg_features(const dsp::Window& win,
                                                  const Config& cfg = {});

// Convenience: features for every window of a stream (dropped windows are
// simply absent; timestamps identify the survivors).
std::vector<WindowFeatures> extract_stream_features(const SensorStream& ecg,
                                                    const Config& cfg = {});

void write_features_csv(const std::string& path,
                        const std::vector<WindowFeatures>& rows);

}  // namespace respira::ecg
