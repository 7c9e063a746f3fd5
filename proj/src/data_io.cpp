#include "respira/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "respira/errors.hpp"

namespace respira::io {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& file) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() && s.find_first_not_of(" \t\r", pos) != std::string::npos)
      throw std::invalid_argument(s);
    if (!std::isfinite(v)) throw SchemaMismatch(file + ": non-finite value '" + s + "'");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw SchemaMismatch(file + ": cannot parse number '" + s + "'");
  }
}

std::int64_t parse_i64(const std::string& s, const std::string& file) {
  std::int64_t v = 0;
  auto begin = s.data();
  auto end = s.data() + s.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{}) throw SchemaMismatch(file + ": cannot parse integer '" + s + "'");
  return v;
}

std::ifstream open_or_throw(const std::string& path) {
  if (!fs::exists(path)) throw MissingFile("no such file: " + path);
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open: " + path);
  return in;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      t.rows.push_back(std::move(fields));
    }
  }
  return t;
}

// Validates uniform sampling and returns the rate. Timestamps must be
// strictly increasing with a constant step (within 0.5 ms of the nominal).
double validate_clock(const std::vector<std::int64_t>& t, const std::string& file) {
  if (t.size() < 2) throw EmptyStream(file + ": fewer than 2 samples");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] <= t[i - 1])
      throw NonMonotonicTimestamps(file + ": t_ms not strictly increasing at row " +
                                   std::to_string(i));
  const double span_ms = static_cast<double>(t.back() - t.front());
  const double dt = span_ms / static_cast<double>(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double step = static_cast<double>(t[i] - t[i - 1]);
    if (std::fabs(step - dt) > 0.5 + 1e-9)
      throw SchemaMismatch(file + ": non-uniform sampling at row " + std::to_string(i));
  }
  return 1000.0 / dt;
}

void write_lines(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw MissingFile("cannot write: " + path);
  out << content;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

SensorStream read_ecg_csv(const std::string& path) {
  Table t = read_csv(path);
  if (t.header.empty() || t.header[0] != "t_ms" || t.header.size() < 2 ||
      t.header.size() > 4 || t.header[1] != "lead1_mv")
    throw SchemaMismatch(path + ": expected header t_ms,lead1_mv[,lead2_mv,lead3_mv]");
  if (t.rows.empty()) throw EmptyStream(path + ": no data rows");

  const std::size_t nch = t.header.size() - 1;
  SensorStream s;
  for (std::size_t c = 0; c < nch; ++c)
    s.channels.push_back({t.header[c + 1], "mV", {}});
  std::vector<std::int64_t> ts;
  ts.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size())
      throw SchemaMismatch(path + ": row with " + std::to_string(row.size()) +
                           " fields, expected " + std::to_string(t.header.size()));
    ts.push_back(parse_i64(row[0], path));
    for (std::size_t c = 0; c < nch; ++c)
      s.channels[c].values.push_back(parse_double(row[c + 1], path));
  }
  s.rate_hz = validate_clock(ts, path);
  s.t0_ms = ts.front();
  return s;
}

SensorStream read_imu_csv(const std::string& path) {
  static const std::vector<std::string> kHeader = {"t_ms", "ax_g", "ay_g", "az_g",
                                                   "gx_dps", "gy_dps", "gz_dps"};
  Table t = read_csv(path);
  if (t.header != kHeader)
    throw SchemaMismatch(path + ": expected header t_ms,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps");
  if (t.rows.empty()) throw EmptyStream(path + ": no data rows");

  SensorStream s;
  for (std::size_t c = 1; c < kHeader.size(); ++c)
    s.channels.push_back({kHeader[c], c <= 3 ? "g" : "dps", {}});
  std::vector<std::int64_t> ts;
  ts.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    if (row.size() != kHeader.size())
      throw SchemaMismatch(path + ": row with " + std::to_string(row.size()) +
                           " fields, expected 7");
    ts.push_back(parse_i64(row[0], path));
    for (std::size_t c = 0; c < 6; ++c)
      s.channels[c].values.push_back(parse_double(row[c + 1], path));
  }
  s.rate_hz = validate_clock(ts, path);
  s.t0_ms = ts.front();
  return s;
}

ResponseSeries read_resp_csv(const std::string& path) {
  static const std::vector<std::string> kHeader = {"t_ms", "br_bpm", "ve_lpm"};
  Table t = read_csv(path);
  if (t.header != kHeader)
    throw SchemaMismatch(path + ": expected header t_ms,br_bpm,ve_lpm");
  ResponseSeries r;
  for (const auto& row : t.rows) {
    if (row.size() != 3)
      throw SchemaMismatch(path + ": row with " + std::to_string(row.size()) +
                           " fields, expected 3");
    ResponseSample s;
    s.t_ms = parse_i64(row[0], path);
    s.br_bpm = parse_double(row[1], path);
    s.ve_lpm = parse_double(row[2], path);
    if (!r.samples.empty() && s.t_ms <= r.samples.back().t_ms)
      throw NonMonotonicTimestamps(path + ": t_ms not strictly increasing");
    r.samples.push_back(s);
  }
  if (r.samples.empty()) throw EmptyStream(path + ": no data rows");
  return r;
}

std::vector<ActivityInterval> read_labels_csv(const std::string& path) {
  static const std::vector<std::string> kHeader = {"start_ms", "end_ms", "activity"};
  Table t = read_csv(path);
  if (t.header != kHeader)
    throw SchemaMismatch(path + ": expected header start_ms,end_ms,activity");
  std::vector<ActivityInterval> out;
  for (const auto& row : t.rows) {
    if (row.size() != 3)
      throw SchemaMismatch(path + ": row with " + std::to_string(row.size()) +
                           " fields, expected 3");
    ActivityInterval iv;
    iv.start_ms = parse_i64(row[0], path);
    iv.end_ms = parse_i64(row[1], path);
    iv.activity = row[2];
    if (iv.end_ms <= iv.start_ms)
      throw SchemaMismatch(path + ": empty or inverted interval");
    out.push_back(iv);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.start_ms < b.start_ms; });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].start_ms < out[i - 1].end_ms)
      throw SchemaMismatch(path + ": overlapping activity intervals");
  return out;
}

SessionManifest read_manifest(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw SchemaMismatch(path + ": invalid JSON: " + e.what());
  }
  SessionManifest m;
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path f(p);
    return f.is_absolute() ? f.string() : (base / f).string();
  };
  try {
    m.ecg_path = resolve(j.at("ecg_path").get<std::string>());
    m.imu_path = resolve(j.at("imu_path").get<std::string>());
    m.resp_path = resolve(j.at("resp_path").get<std::string>());
    m.labels_path = resolve(j.at("labels_path").get<std::string>());
    m.subject_id = j.value("subject_id", std::string("unknown"));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaMismatch(path + ": " + e.what());
  }
  return m;
}

Session load_session(const SessionManifest& manifest) {
  Session s;
  s.subject_id = manifest.subject_id;
  s.ecg = read_ecg_csv(manifest.ecg_path);
  s.imu = read_imu_csv(manifest.imu_path);
  s.resp = read_resp_csv(manifest.resp_path);
  s.activity_intervals = manifest.activity_intervals.empty()
                             ? read_labels_csv(manifest.labels_path)
                             : manifest.activity_intervals;

  // Trim both sensor streams to their overlapping interval so windowing
  // shares one clock.
  const std::int64_t t0 = std::max(s.ecg.t0_ms, s.imu.t0_ms);
  const std::int64_t t1 = std::min(s.ecg.end_ms(), s.imu.end_ms());
  if (t1 <= t0) throw EmptyStream("ECG and IMU streams do not overlap in time");
  auto trim = [&](SensorStream& st) {
    const auto skip = static_cast<std::size_t>(
        std::llround((static_cast<double>(t0 - st.t0_ms) / 1000.0) * st.rate_hz));
    const auto keep = static_cast<std::size_t>(
        std::llround((static_cast<double>(t1 - t0) / 1000.0) * st.rate_hz));
    for (auto& ch : st.channels) {
      if (skip >= ch.values.size()) throw EmptyStream("stream trim removed all samples");
      const std::size_t avail = ch.values.size() - skip;
      ch.values = std::vector<double>(ch.values.begin() + static_cast<std::ptrdiff_t>(skip),
                                      ch.values.begin() +
                                          static_cast<std::ptrdiff_t>(skip + std::min(keep, avail)));
    }
    st.t0_ms = t0;
  };
  trim(s.ecg);
  trim(s.imu);
  return s;
}

std::vector<ResponseWindow> window_response(const ResponseSeries& resp,
                                            double win_s, double step_s) {
  if (resp.samples.empty()) throw EmptySeries("response series has no samples");
  return window_response(resp, win_s, step_s, resp.samples.front().t_ms,
                         resp.samples.back().t_ms + 1);
}

std::vector<ResponseWindow> window_response(const ResponseSeries& resp,
                                            double win_s, double step_s,
                                            std::int64_t t0_ms,
                                            std::int64_t end_ms) {
  if (resp.samples.empty()) throw EmptySeries("response series has no samples");
  if (!(win_s > step_s) || !(step_s > 0))
    throw BadConfig("require win_s > step_s > 0");
  const double duration_s = static_cast<double>(end_ms - t0_ms) / 1000.0;
  const std::size_t count =
      duration_s < win_s
          ? 0
          : static_cast<std::size_t>(std::floor((duration_s - win_s) / step_s + 1e-9)) + 1;

  std::vector<ResponseWindow> out;
  out.reserve(count);
  const auto win_ms = static_cast<std::int64_t>(std::llround(win_s * 1000.0));
  const auto step_ms = static_cast<std::int64_t>(std::llround(step_s * 1000.0));
  std::size_t lo = 0;
  for (std::size_t w = 0; w < count; ++w) {
    const std::int64_t start = t0_ms + static_cast<std::int64_t>(w) * step_ms;
    const std::int64_t stop = start + win_ms;
    while (lo < resp.samples.size() && resp.samples[lo].t_ms < start) ++lo;
    double br = 0.0, ve = 0.0;
    std::size_t n = 0;
    for (std::size_t i = lo; i < resp.samples.size() && resp.samples[i].t_ms < stop; ++i) {
      br += resp.samples[i].br_bpm;
      ve += resp.samples[i].ve_lpm;
      ++n;
    }
    ResponseWindow rw;
    rw.t_center_ms = start + win_ms / 2;
    if (n > 0) {
      rw.br_mean = br / static_cast<double>(n);
      rw.ve_mean = ve / static_cast<double>(n);
    } else {
      rw.missing = true;
      rw.br_mean = rw.ve_mean = std::nan("");
    }
    out.push_back(rw);
  }
  return out;
}

const ActivityInterval* interval_at(const std::vector<ActivityInterval>& ivs,
                                    std::int64_t t_ms) {
  for (const auto& iv : ivs)
    if (t_ms >= iv.start_ms && t_ms < iv.end_ms) return &iv;
  return nullptr;
}

void write_ecg_csv(const std::string& path, const SensorStream& ecg) {
  std::ostringstream out;
  out << "t_ms";
  for (const auto& ch : ecg.channels) out << ',' << ch.name;
  out << '\n';
  const double dt = 1000.0 / ecg.rate_hz;
  for (std::size_t i = 0; i < ecg.length(); ++i) {
    out << ecg.t0_ms + static_cast<std::int64_t>(std::llround(dt * static_cast<double>(i)));
    for (const auto& ch : ecg.channels) out << ',' << fmt(ch.values[i]);
    out << '\n';
  }
  write_lines(path, out.str());
}

void write_imu_csv(const std::string& path, const SensorStream& imu) {
  write_ecg_csv(path, imu);  // identical layout, header from channel names
}

void write_resp_csv(const std::string& path, const ResponseSeries& resp) {
  std::ostringstream out;
  out << "t_ms,br_bpm,ve_lpm\n";
  for (const auto& s : resp.samples)
    out << s.t_ms << ',' << fmt(s.br_bpm) << ',' << fmt(s.ve_lpm) << '\n';
  write_lines(path, out.str());
}

void write_labels_csv(const std::string& path,
                      const std::vector<ActivityInterval>& labels) {
  std::ostringstream out;
  out << "start_ms,end_ms,activity\n";
  for (const auto& iv : labels)
    out << iv.start_ms << ',' << iv.end_ms << ',' << iv.activity << '\n';
  write_lines(path, out.str());
}

}  // namespace respira::io
