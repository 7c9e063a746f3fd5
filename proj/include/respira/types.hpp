#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace respira {

// One uniformly sampled channel with engineering units (mV, g, dps).
struct Channel {
  std::string name;
  std::string units;
  std::vector<double> values;
};

// Uniformly sampled multichannel time series.
struct SensorStream {
  std::vector<Channel> channels;
  double rate_hz = 0.0;
  std::int64_t t0_ms = 0;

  std::size_t length() const {
    return channels.empty() ? 0 : channels.front().values.size();
  }
  double duration_s() const {
    return rate_hz > 0 ? static_cast<double>(length()) / rate_hz : 0.0;
  }
  std::int64_t end_ms() const {
    return t0_ms + static_cast<std::int64_t>(1000.0 * duration_s());
  }
};

// Irregularly sampled ground-truth respiration samples.
struct ResponseSample {
  std::int64_t t_ms = 0;
  double br_bpm = 0.0;  // breaths per minute
  double ve_lpm = 0.0;  // liters per minute
};

struct ResponseSeries {
  std::vector<ResponseSample> samples;
};

struct ActivityInterval {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::string activity;
};

struct SessionManifest {
  std::string ecg_path;
  std::string imu_path;
  std::string resp_path;
  std::string labels_path;
  std::string subject_id;
  std::vector<ActivityInterval> activity_intervals;  // filled from labels_path
};

// Averaged response labels on the feature window clock. A window with no
// spirometer samples inside it is emitted with missing=true so downstream
// stages can keep it for inference but drop it from training and scoring.
struct ResponseWindow {
  std::int64_t t_center_ms = 0;
  double br_mean = 0.0;
  double ve_mean = 0.0;
  bool missing = false;
};

// One 15 s window's paired features plus whatever labels are known for it.
struct WindowedInstance {
  std::int64_t t_center_ms = 0;
  std::vector<double> imu_features;  // 90 dims
  std::vector<double> ecg_features;  // 20 dims
  std::optional<std::string> context;
  std::optional<double> br;
  std::optional<double> ve;
};

// Default context set; sessions may configure their own.
inline const std::vector<std::string>& default_contexts() {
  static const std::vector<std::string> kContexts = {"rest", "walk", "run",
                                                     "bike", "wave"};
  return kContexts;
}

}  // namespace respira
