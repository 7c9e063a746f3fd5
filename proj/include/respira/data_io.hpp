#pragma once

#include <string>
#include <vector>

#include "respira/types.hpp"

namespace respira::io {

struct Session {
  SensorStream ecg;
  SensorStream imu;
  ResponseSeries resp;
  std::vector<ActivityInterval> activity_intervals;
  std::string subject_id;
};

// Parses a JSON manifest ({"ecg_path":..., "imu_path":..., "resp_path":...,
// "labels_path":..., "subject_id":...}); relative paths resolve against the
// manifest's directory.
SessionManifest read_manifest(const std::string& path);

// Loads and validates the four session files. ECG keeps only channels that
// are present (>=1 lead); IMU must have exactly 6 channels. Streams are
// trimmed to their overlapping time interval so both share t0.
Session load_session(const SessionManifest& manifest);

// Expected headers for each file kind.
SensorStream read_ecg_csv(const std::string& path);
SensorStream read_imu_csv(const std::string& path);
ResponseSeries read_resp_csv(const std::string& path);
std::vector<ActivityInterval> read_labels_csv(const std::string& path);

void write_ecg_csv(const std::string& path, const SensorStream& ecg);
void write_imu_csv(const std::string& path, const SensorStream& imu);
void write_resp_csv(const std::string& path, const ResponseSeries& resp);
void write_labels_csv(const std::string& path,
                      const std::vector<ActivityInterval>& labels);

// Arithmetic mean of the spirometer samples falling in [t, t+win) for each
// window on the shared feature clock (one window every step_s starting at
// t0_ms). Windows without samples are emitted with missing=true. Throws
// EmptySeries when resp has no samples at all.
std::vector<ResponseWindow> window_response(const ResponseSeries& resp,
                                            double win_s = 15.0,
                                            double step_s = 3.0);
std::vector<ResponseWindow> window_response(const ResponseSeries& resp,
                                            double win_s, double step_s,
                                            std::int64_t t0_ms,
                                            std::int64_t end_ms);

// Activity label whose interval contains t_ms, if any.
const ActivityInterval* interval_at(const std::vector<ActivityInterval>& ivs,
                                    std::int64_t t_ms);

}  // namespace respira::io
