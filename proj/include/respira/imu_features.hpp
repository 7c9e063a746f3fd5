#pragma once

#include <string>
#include <vector>

#include "respira/dsp.hpp"

namespace respira::imu {

inline constexpr int kRawDim = 96;
inline constexpr int kFeatureDim = 90;

struct Config {
  double win_s = 15.0, step_s = 3.0;
  int median_k = 5;
  double band_lo_hz = 0.01, band_hi_hz = 20.0;
  double accel_clip_g = 4.0;    // ADC range of the accelerometer
  double gyro_clip_dps = 360.0; // ADC range of the gyroscope
  int entropy_bins = 16;
};

// Exported layout (90 dims), channel order ax,ay,az,gx,gy,gz:
//   [0..41]  per channel {mean, max, median, std, rms, variance, iqr}
//   [42..47] Pearson correlation of (ax,ay) (ax,az) (ay,az) (gx,gy) (gx,gz) (gy,gz)
//   [48..71] per channel {band power 0.01-0.5, 0.5-3, 3-20 Hz, mean-crossing rate}
//   [72..89] per channel {Teager mean, Teager max, Teager variance}
// The raw 96-slot vector additionally carries the six joint-entropy values
// of the same pairs between the correlation and band-power blocks; the
// export mask drops them.
const std::vector<std::string>& feature_names();

// clip -> median -> 0.01-20 Hz band-pass, per channel.
std::vector<std::vector<double>> preprocess(const dsp::Window& win,
                                            const Config& cfg = {});

// 90-dim exported feature vector. Throws WrongChannelCount unless the
// window has exactly 6 channels.
std::vector<double> extract_imu_features(const dsp::Window& win,
                                         const Config& cfg = {});

// All 96 raw slots (entropy included), for audits and tests.
std::vector<double> extract_raw_features(const dsp::Window& win,
                                         const Config& cfg = {});

struct WindowFeatures {
  std::int64_t t_center_ms = 0;
  std::vector<double> values;  // kFeatureDim
};

std::vector<WindowFeatures> extract_stream_features(const SensorStream& imu,
                                                    const Config& cfg = {});

void write_features_csv(const std::string& path,
                        const std::vector<WindowFeatures>& rows);

// Joint entropy of a 2-D equal-width histogram over the standardized pair
// (natural log); 0 when either side is degenerate.
double joint_entropy(const std::vector<double>& a, const std::vector<double>& b,
                     int bins = 16);

// Pearson correlation; 0 when either side has zero variance.
double correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace respira::imu
