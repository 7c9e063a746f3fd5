#include "respira/ecg_features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "respira/errors.hpp"

namespace respira::ecg {

namespace {

int ms_to_samples(double ms, double rate_hz) {
  return static_cast<int>(std::llround(ms * rate_hz / 1000.0));
}

// Local maxima above an absolute threshold.
std::vector<int> peaks_above(const std::vector<double>& x, int lo, int hi,
                             double threshold) {
  std::vector<int> out;
  for (int i = std::max(lo, 1); i < std::min(hi, static_cast<int>(x.size()) - 1); ++i) {
    const double v = x[static_cast<std::size_t>(i)];
    if (v < threshold) continue;
    if (v > x[static_cast<std::size_t>(i - 1)] && v >= x[static_cast<std::size_t>(i + 1)])
      out.push_back(i);
  }
  return out;
}

// Greedy amplitude-ordered lockout: keep the strongest peaks, reject any
// candidate within the refractory distance of an accepted one.
std::vector<int> apply_lockout(const std::vector<int>& candidates,
                               const std::vector<double>& x, int lockout) {
  std::vector<int> order(candidates);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return x[static_cast<std::size_t>(a)] > x[static_cast<std::size_t>(b)];
  });
  std::vector<int> kept;
  for (int c : order) {
    bool ok = true;
    for (int k : kept)
      if (std::abs(c - k) < lockout) {
        ok = false;
        break;
      }
    if (ok) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0
                   : std::accumulate(v.begin(), v.end(), 0.0) /
                         static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Half-level crossing offset to the left/right of idx, with linear
// interpolation between samples. Search stays within [lo, hi].
double cross_left(const std::vector<double>& x, int idx, double level, int lo) {
  for (int i = idx; i > lo; --i) {
    const double a = x[static_cast<std::size_t>(i - 1)], b = x[static_cast<std::size_t>(i)];
    if (a < level && b >= level) {
      const double frac = (level - a) / (b - a);
      return static_cast<double>(i - 1) + frac;
    }
  }
  return static_cast<double>(lo);
}

double cross_right(const std::vector<double>& x, int idx, double level, int hi) {
  for (int i = idx; i < hi; ++i) {
    const double a = x[static_cast<std::size_t>(i)], b = x[static_cast<std::size_t>(i + 1)];
    if (a >= level && b < level) {
      const double frac = (a - level) / (a - b);
      return static_cast<double>(i) + frac;
    }
  }
  return static_cast<double>(hi);
}

}  // namespace

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> kNames = [] {
    static const char* fields[kMorphologyFields] = {
        "r_mag", "r_prom", "r_width_ms", "t_mag",  "t_width_ms",
        "qs_dist_ms", "st_dist_ms", "bpm", "r_power", "t_power"};
    std::vector<std::string> names;
    for (const char* f : fields) {
      names.push_back(std::string(f) + "_mean");
      names.push_back(std::string(f) + "_std");
    }
    return names;
  }();
  return kNames;
}

std::vector<double> preprocess(const dsp::Window& win, const Config& cfg) {
  if (win.samples.empty()) throw WrongChannelCount("ECG window has no channels");
  const auto& lead1 = win.samples.front();
  auto y = dsp::median_filter(lead1, cfg.median_k);
  y = dsp::detrend_linear(y);
  return dsp::bandpass(y, cfg.band_lo_hz, cfg.band_hi_hz, win.rate_hz);
}

std::vector<int> detect_r_peaks(const std::vector<double>& x, double rate_hz,
                                const Config& cfg) {
  if (x.empty()) throw NoBeatsFound("empty window");
  const double peak = *std::max_element(x.begin(), x.end());
  const double threshold = cfg.peak_threshold * peak;
  const int lockout = ms_to_samples(cfg.lockout_ms, rate_hz);
  std::vector<int> r;
  if (peak > 0) {
    r = apply_lockout(peaks_above(x, 0, static_cast<int>(x.size()), threshold), x,
                      lockout);
  }
  if (static_cast<int>(r.size()) < cfg.min_beats)
    throw NoBeatsFound("only " + std::to_string(r.size()) + " R peaks in window");
  return r;
}

std::vector<int> correct_missed_peaks(std::vector<int> r, const std::vector<double>& x,
                                      double rate_hz, const Config& cfg) {
  if (r.size() < 3) return r;
  const int lockout = ms_to_samples(cfg.lockout_ms, rate_hz);

  auto mean_rr = [&]() {
    double acc = 0.0;
    for (std::size_t i = 1; i < r.size(); ++i) acc += static_cast<double>(r[i] - r[i - 1]);
    return acc / static_cast<double>(r.size() - 1);
  };

  // Drop the smaller peak of any too-close pair, judged against the mean
  // interval of the incoming list (a fixed reference: recomputing it after
  // each removal inflates the mean and cascades on mixed-rate windows).
  {
    const double rr0 = mean_rr();
    bool changed = true;
    while (changed && r.size() > 2) {
      changed = false;
      for (std::size_t i = 1; i < r.size(); ++i) {
        if (static_cast<double>(r[i] - r[i - 1]) < 0.8 * rr0) {
          const std::size_t victim =
              x[static_cast<std::size_t>(r[i])] < x[static_cast<std::size_t>(r[i - 1])]
                  ? i
                  : i - 1;
          r.erase(r.begin() + static_cast<std::ptrdiff_t>(victim));
          changed = true;
          break;
        }
      }
    }
  }

  // Re-search long gaps at the lowered per-window threshold.
  const double window_max = *std::max_element(x.begin(), x.end());
  bool changed = true;
  int guard = 0;
  while (changed && ++guard < 64) {
    changed = false;
    const double rr = mean_rr();
    for (std::size_t i = 1; i < r.size(); ++i) {
      const double gap = static_cast<double>(r[i] - r[i - 1]);
      if (gap <= 1.2 * rr) continue;
      const int lo = r[i - 1] + lockout;
      const int hi = r[i] - lockout;
      if (hi <= lo) continue;
      const auto cands = peaks_above(x, lo, hi, cfg.repair_threshold * window_max);
      if (cands.empty()) continue;
      const int best = *std::max_element(cands.begin(), cands.end(), [&](int a, int b) {
        return x[static_cast<std::size_t>(a)] < x[static_cast<std::size_t>(b)];
      });
      r.insert(std::lower_bound(r.begin(), r.end(), best), best);
      changed = true;
      break;
    }
  }
  return r;
}

BeatFiducials locate_qst(int r_idx, const std::vector<double>& x, double rate_hz,
                         const Config& cfg, int next_r_idx) {
  const int n = static_cast<int>(x.size());
  const int q_span = ms_to_samples(cfg.q_search_ms, rate_hz);
  const int s_span = ms_to_samples(cfg.s_search_ms, rate_hz);
  int t_span = ms_to_samples(cfg.t_search_ms, rate_hz);
  // Keep the T search clear of the following beat's complex.
  if (next_r_idx > r_idx)
    t_span = std::min(t_span, next_r_idx - r_idx - q_span);

  if (r_idx - q_span < 0 || r_idx + ms_to_samples(cfg.t_search_ms, rate_hz) >= n)
    throw SegmentOutOfBounds("beat segment exceeds window bounds");
  if (t_span <= s_span + 2) throw SegmentOutOfBounds("no room for a T search segment");

  auto min_in = [&](int lo, int hi) {
    int best = lo;
    for (int i = lo; i < hi; ++i)
      if (x[static_cast<std::size_t>(i)] < x[static_cast<std::size_t>(best)]) best = i;
    return best;
  };
  auto max_in = [&](int lo, int hi) {
    int best = lo;
    for (int i = lo; i < hi; ++i)
      if (x[static_cast<std::size_t>(i)] > x[static_cast<std::size_t>(best)]) best = i;
    return best;
  };

  BeatFiducials f;
  f.r_idx = r_idx;
  f.q_idx = min_in(r_idx - q_span, r_idx);
  f.s_idx = min_in(r_idx + 1, r_idx + s_span);
  f.t_idx = max_in(f.s_idx + 1, r_idx + t_span);
  return f;
}

BeatMorphology beat_morphology(const BeatFiducials& f, const std::vector<double>& x,
                               double rate_hz, double rr_ms) {
  BeatMorphology m;
  const double ms_per_sample = 1000.0 / rate_hz;
  m.r_mag = x[static_cast<std::size_t>(f.r_idx)];
  // Prominence relative to the surrounding Q/S saddles.
  m.r_prom = m.r_mag - std::max(x[static_cast<std::size_t>(f.q_idx)],
                                x[static_cast<std::size_t>(f.s_idx)]);

  const double r_level = m.r_mag - m.r_prom / 2.0;
  const double rl = cross_left(x, f.r_idx, r_level, f.q_idx);
  const double rr = cross_right(x, f.r_idx, r_level, f.s_idx);
  m.r_width_ms = (rr - rl) * ms_per_sample;

  m.t_mag = x[static_cast<std::size_t>(f.t_idx)];
  const double t_level = m.t_mag / 2.0;  // detrended baseline ~ 0
  const int t_hi = std::min(static_cast<int>(x.size()) - 1,
                            f.t_idx + static_cast<int>(std::llround(0.2 * rate_hz)));
  const double tl = cross_left(x, f.t_idx, t_level, f.s_idx);
  const double tr = cross_right(x, f.t_idx, t_level, t_hi);
  m.t_width_ms = (tr - tl) * ms_per_sample;

  m.qs_dist_ms = static_cast<double>(f.s_idx - f.q_idx) * ms_per_sample;
  m.st_dist_ms = static_cast<double>(f.t_idx - f.s_idx) * ms_per_sample;
  m.bpm = rr_ms > 0 ? 60000.0 / rr_ms : 0.0;
  m.r_power = 0.5 * (m.r_width_ms / 1000.0) * m.r_prom;
  m.t_power = 0.5 * (m.t_width_ms / 1000.0) * m.t_mag;
  return m;
}

std::optional<WindowFeatures> window_ecg_features(const dsp::Window& win,
                                                  const Config& cfg) {
  const std::vector<double> x = preprocess(win, cfg);
  std::vector<int> r;
  try {
    r = detect_r_peaks(x, win.rate_hz, cfg);
  } catch (const NoBeatsFound&) {
    return std::nullopt;
  }
  r = correct_missed_peaks(std::move(r), x, win.rate_hz, cfg);

  std::vector<BeatMorphology> beats;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const int next = i + 1 < r.size() ? r[i + 1] : -1;
    const double rr_ms = next > 0
                             ? static_cast<double>(next - r[i]) * 1000.0 / win.rate_hz
                             : 0.0;
    if (rr_ms <= 0) continue;  // last beat has no interval
    try {
      const BeatFiducials f = locate_qst(r[i], x, win.rate_hz, cfg, next);
      beats.push_back(beat_morphology(f, x, win.rate_hz, rr_ms));
    } catch (const SegmentOutOfBounds&) {
      // edge beat, skip
    }
  }
  if (static_cast<int>(beats.size()) < cfg.min_beats) return std::nullopt;

  WindowFeatures out;
  out.t_center_ms = win.t_center_ms;
  out.n_beats = static_cast<int>(beats.size());
  out.values.reserve(kFeatureDim);
  for (int field = 0; field < kMorphologyFields; ++field) {
    std::vector<double> column;
    column.reserve(beats.size());
    for (const auto& b : beats) column.push_back(b.as_array()[static_cast<std::size_t>(field)]);
    out.values.push_back(mean_of(column));
    out.values.push_back(std_of(column));
  }
  return out;
}

std::vector<WindowFeatures> extract_stream_features(const SensorStream& ecg,
                                                    const Config& cfg) {
  std::vector<WindowFeatures> out;
  for (const auto& win : dsp::sliding_windows(ecg, cfg.win_s, cfg.step_s)) {
    if (auto f = window_ecg_features(win, cfg)) out.push_back(std::move(*f));
  }
  return out;
}

void write_features_csv(const std::string& path,
                        const std::vector<WindowFeatures>& rows) {
  std::ofstream out(path);
  if (!out) throw MissingFile("cannot write: " + path);
  out << "t_center_ms";
  for (const auto& n : feature_names()) out << ',' << n;
  out << '\n';
  char buf[40];
  for (const auto& row : rows) {
    out << row.t_center_ms;
    for (double v : row.values) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace respira::ecg
