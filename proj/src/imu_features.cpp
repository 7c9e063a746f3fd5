#include "respira/imu_features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "respira/errors.hpp"

namespace respira::imu {

namespace {

constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}};

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0
                   : std::accumulate(v.begin(), v.end(), 0.0) /
                         static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

// Linear-interpolated quantile of a sorted copy (q in [0,1]).
double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return 0.0;
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;  // degenerate pair
  return sab / std::sqrt(saa * sbb);
}

double joint_entropy(const std::vector<double>& a, const std::vector<double>& b,
                     int bins) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0 || bins < 2) return 0.0;
  const double ma = mean_of(a), mb = mean_of(b);
  const double sa = std::sqrt(variance_of(a, ma)), sb = std::sqrt(variance_of(b, mb));
  if (sa <= 0.0 || sb <= 0.0) return 0.0;

  std::vector<double> za(n), zb(n);
  for (std::size_t i = 0; i < n; ++i) {
    za[i] = (a[i] - ma) / sa;
    zb[i] = (b[i] - mb) / sb;
  }
  const auto [za_min, za_max] = std::minmax_element(za.begin(), za.end());
  const auto [zb_min, zb_max] = std::minmax_element(zb.begin(), zb.end());
  const double wa = (*za_max - *za_min) / bins, wb = (*zb_max - *zb_min) / bins;
  if (wa <= 0.0 || wb <= 0.0) return 0.0;

  std::vector<int> hist(static_cast<std::size_t>(bins * bins), 0);
  for (std::size_t i = 0; i < n; ++i) {
    int ia = std::min(bins - 1, static_cast<int>((za[i] - *za_min) / wa));
    int ib = std::min(bins - 1, static_cast<int>((zb[i] - *zb_min) / wb));
    ++hist[static_cast<std::size_t>(ia * bins + ib)];
  }
  double h = 0.0;
  for (int c : hist) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

std::vector<std::vector<double>> preprocess(const dsp::Window& win, const Config& cfg) {
  if (win.samples.size() != 6)
    throw WrongChannelCount("IMU window must have 6 channels, got " +
                            std::to_string(win.samples.size()));
  std::vector<std::vector<double>> out;
  out.reserve(6);
  for (std::size_t c = 0; c < 6; ++c) {
    const double clip = c < 3 ? cfg.accel_clip_g : cfg.gyro_clip_dps;
    auto y = dsp::level_clip(win.samples[c], -clip, clip);
    y = dsp::median_filter(y, cfg.median_k);
    out.push_back(dsp::bandpass(y, cfg.band_lo_hz, cfg.band_hi_hz, win.rate_hz));
  }
  return out;
}

namespace {

std::vector<double> raw_features(const std::vector<std::vector<double>>& ch,
                                 double rate_hz, const Config& cfg) {
  std::vector<double> f;
  f.reserve(kRawDim);

  // Statistical block.
  for (const auto& x : ch) {
    const double m = mean_of(x);
    const double var = variance_of(x, m);
    std::vector<double> sorted(x);
    std::sort(sorted.begin(), sorted.end());
    double rms = 0.0;
    for (double v : x) rms += v * v;
    rms = std::sqrt(rms / static_cast<double>(std::max<std::size_t>(1, x.size())));
    f.push_back(m);
    f.push_back(sorted.empty() ? 0.0 : sorted.back());
    f.push_back(quantile_sorted(sorted, 0.5));
    f.push_back(std::sqrt(var));
    f.push_back(rms);
    f.push_back(var);
    f.push_back(quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25));
  }

  // Pairwise correlation, then joint entropy (entropy slots are masked out
  // of the exported layout).
  for (const auto& p : kPairs) f.push_back(correlation(ch[p[0]], ch[p[1]]));
  for (const auto& p : kPairs)
    f.push_back(joint_entropy(ch[p[0]], ch[p[1]], cfg.entropy_bins));

  // Frequency/power block: one periodogram per channel, summed per band.
  for (const auto& x : ch) {
    const auto pg = dsp::periodogram(x, rate_hz);
    double bands[3] = {0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < pg.power.size(); ++k) {
      const double freq = pg.freq_hz[k];
      if (freq >= 0.01 && freq < 0.5)
        bands[0] += pg.power[k];
      else if (freq >= 0.5 && freq < 3.0)
        bands[1] += pg.power[k];
      else if (freq >= 3.0 && freq < rate_hz / 2.0)
        bands[2] += pg.power[k];
    }
    f.push_back(bands[0]);
    f.push_back(bands[1]);
    f.push_back(bands[2]);
    f.push_back(dsp::mean_crossing_rate(x, rate_hz));
  }

  // Teager block.
  for (const auto& x : ch) {
    const auto te = dsp::teager_energy(x);
    const double m = mean_of(te);
    f.push_back(m);
    f.push_back(*std::max_element(te.begin(), te.end()));
    f.push_back(variance_of(te, m));
  }
  return f;
}

}  // namespace

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> kNames = [] {
    static const char* kCh[6] = {"ax", "ay", "az", "gx", "gy", "gz"};
    static const char* kStats[7] = {"mean", "max", "median", "std",
                                    "rms",  "variance", "iqr"};
    static const char* kPairName[6] = {"ax_ay", "ax_az", "ay_az",
                                       "gx_gy", "gx_gz", "gy_gz"};
    std::vector<std::string> names;
    for (const char* c : kCh)
      for (const char* s : kStats) names.push_back(std::string(c) + "_" + s);
    for (const char* p : kPairName) names.push_back(std::string("corr_") + p);
    for (const char* c : kCh) {
      names.push_back(std::string(c) + "_bp_low");
      names.push_back(std::string(c) + "_bp_mid");
      names.push_back(std::string(c) + "_bp_high");
      names.push_back(std::string(c) + "_mcr");
    }
    for (const char* c : kCh) {
      names.push_back(std::string(c) + "_teager_mean");
      names.push_back(std::string(c) + "_teager_max");
      names.push_back(std::string(c) + "_teager_var");
    }
    return names;
  }();
  return kNames;
}

std::vector<double> extract_raw_features(const dsp::Window& win, const Config& cfg) {
  return raw_features(preprocess(win, cfg), win.rate_hz, cfg);
}

std::vector<double> extract_imu_features(const dsp::Window& win, const Config& cfg) {
  const auto raw = extract_raw_features(win, cfg);
  std::vector<double> out;
  out.reserve(kFeatureDim);
  for (int i = 0; i < kRawDim; ++i) {
    if (i >= 48 && i < 54) continue;  // joint-entropy slots
    out.push_back(raw[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<WindowFeatures> extract_stream_features(const SensorStream& imu,
                                                    const Config& cfg) {
  std::vector<WindowFeatures> out;
  for (const auto& win : dsp::sliding_windows(imu, cfg.win_s, cfg.step_s)) {
    WindowFeatures w;
    w.t_center_ms = win.t_center_ms;
    w.values = extract_imu_features(win, cfg);
    out.push_back(std::move(w));
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

}  // namespace respira::imu
