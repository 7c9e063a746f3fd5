// respira: context-conditioned respiration inference from wearable ECG+IMU.
//
// Stage-oriented command surface; every stage is deterministic given the
// seed and reads the previous stage's files from the shared --out directory.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "respira/biomarker.hpp"
#include "respira/data_io.hpp"
#include "respira/ecg_features.hpp"
#include "respira/errors.hpp"
#include "respira/imu_features.hpp"
#include "respira/pipeline.hpp"
#include "respira/rng.hpp"
#include "respira/synth.hpp"

namespace fs = std::filesystem;
using namespace respira;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonArgs {
  std::string out = ".";
  std::uint64_t seed = 1;
  std::string target = "both";
  std::string model = "glm";
  double tau = 0.8;
  double ratio = 0.7;
  bool sweep = false;
  std::string split = "instance";
  std::string manifest;
};

nlohmann::json provenance(const CommonArgs& a, const std::string& command) {
  std::ostringstream cfg;
  cfg << command << '|' << a.target << '|' << a.model << '|' << a.tau << '|'
      << a.ratio << '|' << a.sweep << '|' << a.split << '|' << a.seed;
  return {{"version", kVersion},
          {"seed", a.seed},
          {"config_hash", fnv1a64(cfg.str())}};
}

std::vector<pipeline::Target> targets_of(const std::string& t) {
  if (t == "both") return {pipeline::Target::br, pipeline::Target::ve};
  return {pipeline::target_from_string(t)};
}

std::vector<reg::ModelKind> models_of(const std::string& m) {
  if (m == "all")
    return {reg::ModelKind::glm, reg::ModelKind::rf, reg::ModelKind::svr,
            reg::ModelKind::gpr, reg::ModelKind::nca};
  return {reg::kind_from_string(m)};
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// feature / response CSV round trip used between stages
// ---------------------------------------------------------------------------

void write_responses_csv(const std::string& path,
                         const std::vector<ResponseWindow>& rows,
                         const std::vector<ActivityInterval>& intervals) {
  std::ofstream out(path);
  if (!out) throw MissingFile("cannot write: " + path);
  out << "t_center_ms,br_bpm,ve_lpm,activity\n";
  for (const auto& r : rows) {
    out << r.t_center_ms << ',';
    if (!r.missing) out << fmt17(r.br_mean);
    out << ',';
    if (!r.missing) out << fmt17(r.ve_mean);
    out << ',';
    if (const auto* iv = io::interval_at(intervals, r.t_center_ms)) out << iv->activity;
    out << '\n';
  }
}

struct FeatureTable {
  std::vector<std::int64_t> t_center_ms;
  std::vector<std::vector<double>> rows;
};

FeatureTable read_feature_csv(const std::string& path, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw MissingFile("no such file: " + path + " (run 'features' first)");
  FeatureTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    table.t_center_ms.push_back(std::stoll(field));
    std::vector<double> row;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    if (row.size() != expected_dim)
      throw SchemaMismatch(path + ": expected " + std::to_string(expected_dim) +
                           " feature columns, got " + std::to_string(row.size()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<WindowedInstance> load_instances(const std::string& dir) {
  const auto imu_t = read_feature_csv(dir + "/imu_features.csv", imu::kFeatureDim);
  const auto ecg_t = read_feature_csv(dir + "/ecg_features.csv", ecg::kFeatureDim);

  std::ifstream in(dir + "/responses.csv");
  if (!in) throw MissingFile("no such file: " + dir + "/responses.csv");
  std::map<std::int64_t, std::pair<std::optional<double>, std::optional<double>>> resp;
  std::map<std::int64_t, std::string> activity;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::stringstream ss(line);
    std::string t, br, ve, act;
    std::getline(ss, t, ',');
    std::getline(ss, br, ',');
    std::getline(ss, ve, ',');
    std::getline(ss, act, ',');
    const auto tc = static_cast<std::int64_t>(std::stoll(t));
    resp[tc] = {br.empty() ? std::nullopt : std::optional<double>(std::stod(br)),
                ve.empty() ? std::nullopt : std::optional<double>(std::stod(ve))};
    if (!act.empty()) activity[tc] = act;
  }

  std::map<std::int64_t, const std::vector<double>*> ecg_by_t;
  for (std::size_t i = 0; i < ecg_t.t_center_ms.size(); ++i)
    ecg_by_t[ecg_t.t_center_ms[i]] = &ecg_t.rows[i];

  std::vector<WindowedInstance> out;
  for (std::size_t i = 0; i < imu_t.t_center_ms.size(); ++i) {
    const auto tc = imu_t.t_center_ms[i];
    const auto eit = ecg_by_t.find(tc);
    if (eit == ecg_by_t.end()) continue;
    WindowedInstance inst;
    inst.t_center_ms = tc;
    inst.imu_features = imu_t.rows[i];
    inst.ecg_features = *eit->second;
    if (auto ait = activity.find(tc); ait != activity.end()) inst.context = ait->second;
    if (auto rit = resp.find(tc); rit != resp.end()) {
      inst.br = rit->second.first;
      inst.ve = rit->second.second;
    }
    out.push_back(std::move(inst));
  }
  if (out.empty()) throw EmptyStream("no joined instances in " + dir);
  return out;
}

std::string bundle_path(const std::string& dir, pipeline::Target t, reg::ModelKind k) {
  return dir + "/model_" + pipeline::to_string(t) + "_" + reg::to_string(k) + ".json";
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int cmd_synth(const CommonArgs& args, double duration_s) {
  auto cfg = synth::default_config();
  cfg.seed = args.seed;
  if (duration_s > 0)
    for (auto& a : cfg.activities) a.duration_s = duration_s;
  const auto session = synth::gen_session(cfg);
  const std::string dir = args.out + "/session";
  synth::write_session(session, dir);
  std::ofstream prov(dir + "/run.json");
  prov << provenance(args, "synth").dump(2) << '\n';
  std::cout << "wrote synthetic session to " << dir << " ("
            << session.truth.windows.size() << " windows, "
            << session.truth.beats.size() << " beats)\n";
  return 0;
}

int cmd_features(const CommonArgs& args) {
  std::string manifest_path = args.manifest;
  if (manifest_path.empty()) {
    manifest_path = args.out + "/session/manifest.json";
    if (!fs::exists(manifest_path))
      throw MissingFile("--manifest not given and " + manifest_path + " not found");
  }
  const auto manifest = io::read_manifest(manifest_path);
  const auto session = io::load_session(manifest);

  const auto imu_feats = imu::extract_stream_features(session.imu);
  const auto ecg_feats = ecg::extract_stream_features(session.ecg);
  const auto responses = io::window_response(session.resp, 15.0, 3.0,
                                             session.imu.t0_ms, session.imu.end_ms());

  fs::create_directories(args.out);
  imu::write_features_csv(args.out + "/imu_features.csv", imu_feats);
  ecg::write_features_csv(args.out + "/ecg_features.csv", ecg_feats);
  write_responses_csv(args.out + "/responses.csv", responses,
                      session.activity_intervals);
  std::ofstream prov(args.out + "/features_run.json");
  prov << provenance(args, "features").dump(2) << '\n';
  std::cout << "features: " << imu_feats.size() << " IMU instances, "
            << ecg_feats.size() << " ECG instances\n";
  return 0;
}

pipeline::Options pipeline_options(const CommonArgs& args) {
  pipeline::Options opt;
  opt.tau = args.tau;
  opt.seed = args.seed;
  // Sweep-friendly costs: the exact-GPR hyperparameter search dominates
  // end-to-end runtime, so the CLI uses a lighter budget than the per-model
  // defaults.
  opt.fit.gpr.restarts = 2;
  opt.fit.gpr.max_iterations = 60;
  return opt;
}

int cmd_train(const CommonArgs& args) {
  const auto instances = load_instances(args.out);
  const auto opt = pipeline_options(args);
  for (const auto target : targets_of(args.target)) {
    for (const auto kind : models_of(args.model)) {
      const auto pipe = pipeline::train_pipeline(instances, kind, target, opt);
      const auto path = bundle_path(args.out, target, kind);
      std::ofstream out(path);
      auto j = nlohmann::json::parse(pipeline::bundle_to_json(pipe));
      j["provenance"] = provenance(args, "train");
      out << j.dump() << '\n';
      std::cout << "trained " << reg::to_string(kind) << " banks for "
                << pipeline::to_string(target) << " -> " << path << '\n';
    }
  }
  return 0;
}

void write_confusion_csv(const std::string& path,
                         const std::vector<std::string>& contexts,
                         const std::map<std::string, std::vector<pipeline::SweepEntry>>&
                             sweeps_by_key) {
  std::ofstream out(path);
  out << "target,model,train_fraction,true_context,predicted_context,count\n";
  for (const auto& [key, entries] : sweeps_by_key) {
    for (const auto& e : entries) {
      for (std::size_t t = 0; t < contexts.size(); ++t)
        for (std::size_t p = 0; p < contexts.size(); ++p)
          out << key << ',' << e.train_fraction << ',' << contexts[t] << ','
              << contexts[p] << ',' << e.result.confusion[t][p] << '\n';
    }
  }
}

int cmd_eval(const CommonArgs& args) {
  const auto instances = load_instances(args.out);

  std::vector<std::string> contexts;
  for (const auto& inst : instances)
    if (inst.context &&
        std::find(contexts.begin(), contexts.end(), *inst.context) == contexts.end())
      contexts.push_back(*inst.context);
  std::sort(contexts.begin(), contexts.end());

  pipeline::SweepOptions sopt;
  sopt.pipeline = pipeline_options(args);
  sopt.mode = args.split == "block" ? pipeline::SplitMode::block
                                    : pipeline::SplitMode::instance;
  if (!args.sweep) sopt.ratios = {args.ratio};

  nlohmann::json metrics;
  metrics["provenance"] = provenance(args, "eval");
  metrics["contexts"] = contexts;

  std::map<std::string, std::vector<pipeline::SweepEntry>> all_sweeps;
  std::ofstream preds(args.out + "/predictions.csv");
  preds << "target,model,train_fraction,t_center_ms";
  for (const auto& c : contexts) preds << ",p_" << c;
  for (const auto& c : contexts) preds << ",pred_" << c;
  preds << ",aggregated,truth,true_context\n";

  for (const auto target : targets_of(args.target)) {
    for (const auto kind : models_of(args.model)) {
      const auto sweep = pipeline::holdout_sweep(instances, kind, target, contexts, sopt);
      const std::string key = pipeline::to_string(target) + "," + reg::to_string(kind);
      nlohmann::json jribbon = nlohmann::json::array();
      for (const auto& e : sweep) {
        nlohmann::json je;
        je["train_fraction"] = e.train_fraction;
        je["n_train"] = e.n_train;
        je["n_test"] = e.result.n_test;
        je["accuracy"] = e.result.accuracy;
        je["tpr"] = e.result.tpr;
        je["fnr"] = e.result.fnr;
        je["confusion"] = e.result.confusion;
        je["mae_overall"] = e.result.mae;
        je["mae_agnostic"] = e.result.mae_agnostic;
        je["mae_per_context"] = e.result.mae_per_context;
        jribbon.push_back(std::move(je));

        for (const auto& rec : e.result.records) {
          preds << pipeline::to_string(target) << ',' << reg::to_string(kind) << ','
                << e.train_fraction << ',' << rec.t_center_ms;
          for (double p : rec.posterior) preds << ',' << fmt17(p);
          for (double p : rec.bank_preds) preds << ',' << fmt17(p);
          preds << ',' << fmt17(rec.aggregated) << ',';
          if (rec.truth) preds << fmt17(*rec.truth);
          preds << ',' << rec.true_context << '\n';
        }
      }
      metrics["results"][pipeline::to_string(target)][reg::to_string(kind)] =
          std::move(jribbon);
      all_sweeps[key] = sweep;
    }
  }

  std::ofstream mj(args.out + "/metrics.json");
  mj << metrics.dump(2) << '\n';
  write_confusion_csv(args.out + "/confusion.csv", contexts, all_sweeps);
  std::cout << "eval: wrote metrics.json, predictions.csv, confusion.csv to "
            << args.out << '\n';
  return 0;
}

int cmd_rank(const CommonArgs& args) {
  std::vector<biomarker::RelevanceRow> rows;
  int bundles = 0;
  for (const auto target : targets_of(args.target)) {
    for (const auto kind : models_of(args.model)) {
      const auto path = bundle_path(args.out, target, kind);
      if (!fs::exists(path)) continue;
      std::ifstream in(path);
      std::stringstream ss;
      ss << in.rdbuf();
      const auto pipe = pipeline::bundle_from_json(ss.str());
      ++bundles;
      for (std::size_t c = 0; c < pipe.banks.contexts.size(); ++c) {
        if (!pipe.banks.banks[c].rankable()) continue;
        const auto rel = biomarker::contextual_relevance(
            {&pipe.banks.banks[c]}, pipe.banks.contexts[c]);
        biomarker::RelevanceRow row;
        row.target = target;
        row.context = pipe.banks.contexts[c];
        row.rel = rel.rel;
        rows.push_back(row);
      }
    }
  }
  if (bundles == 0)
    throw MissingFile("no trained model bundles in " + args.out + " (run 'train' first)");

  // Merge duplicate (target, context) rows across model kinds by averaging.
  std::map<std::pair<std::string, std::string>, std::vector<biomarker::RelevanceRow>> by_key;
  for (const auto& r : rows)
    by_key[{pipeline::to_string(r.target), r.context}].push_back(r);
  std::vector<biomarker::RelevanceRow> merged;
  for (const auto& [key, group] : by_key) {
    biomarker::RelevanceRow m;
    m.target = pipeline::target_from_string(key.first);
    m.context = key.second;
    double sum = 0.0;
    for (const auto& g : group)
      for (int b = 0; b < biomarker::kBiomarkers; ++b)
        m.rel[static_cast<std::size_t>(b)] += g.rel[static_cast<std::size_t>(b)];
    for (auto& v : m.rel) {
      v /= static_cast<double>(group.size());
      sum += v;
    }
    if (sum > 0)
      for (auto& v : m.rel) v = 100.0 * v / sum;
    merged.push_back(m);
  }
  biomarker::write_relevance_csv(args.out + "/relevance.csv", merged);
  std::cout << "rank: wrote relevance.csv with " << merged.size() << " rows\n";
  return 0;
}

int cmd_report(const CommonArgs& args) {
  std::ostringstream rep;
  const std::string mpath = args.out + "/metrics.json";
  if (fs::exists(mpath)) {
    std::ifstream in(mpath);
    nlohmann::json metrics;
    in >> metrics;
    rep << "== Context classification and inference loss ==\n";
    const nlohmann::json results = metrics.value("results", nlohmann::json::object());
    for (const auto& [target, models] : results.items()) {
      for (const auto& [model, entries] : models.items()) {
        rep << "\ntarget " << target << ", model " << model << ":\n";
        rep << "  train%   accuracy   MAE(context)   MAE(agnostic)\n";
        for (const auto& e : entries) {
          char line[160];
          std::snprintf(line, sizeof(line), "  %5.0f%%   %7.4f   %11.4f   %12.4f\n",
                        100.0 * e.value("train_fraction", 0.0),
                        e.value("accuracy", 0.0), e.value("mae_overall", 0.0),
                        e.value("mae_agnostic", 0.0));
          rep << line;
        }
      }
    }
  }
  const std::string rpath = args.out + "/relevance.csv";
  if (fs::exists(rpath)) {
    rep << "\n== Biomarker relevance (percent) ==\n";
    std::ifstream in(rpath);
    std::string line;
    while (std::getline(in, line)) rep << "  " << line << '\n';
  }
  if (rep.str().empty()) {
    throw MissingFile("nothing to report in " + args.out +
                      " (run 'eval' and/or 'rank' first)");
  }
  std::cout << rep.str();
  std::ofstream out(args.out + "/report.txt");
  out << rep.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"respira: context-aware respiration inference from wearable ECG and IMU"};
  app.require_subcommand(1);

  CommonArgs args;
  double synth_duration = -1.0;

  auto add_common = [&](CLI::App* cmd, bool with_model = true) {
    cmd->add_option("--out", args.out, "working directory for stage outputs");
    cmd->add_option("--seed", args.seed, "run seed (all randomness derives from it)");
    if (with_model) {
      cmd->add_option("--target", args.target, "br, ve or both")
          ->check(CLI::IsMember({"br", "ve", "both"}));
      cmd->add_option("--model", args.model, "glm, rf, svm, gpr, nca or all")
          ->check(CLI::IsMember({"glm", "rf", "svm", "gpr", "nca", "all"}));
      cmd->add_option("--tau", args.tau, "posterior selection threshold");
    }
  };

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic session");
  add_common(synth_cmd, false);
  synth_cmd->add_option("--duration", synth_duration, "seconds per activity");

  auto* features_cmd =
      app.add_subcommand("features", "extract windowed feature and response CSVs");
  add_common(features_cmd, false);
  features_cmd->add_option("--manifest", args.manifest, "session manifest JSON");

  auto* train_cmd = app.add_subcommand("train", "train classifier and context banks");
  add_common(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "hold-out evaluation (single ratio or sweep)");
  add_common(eval_cmd);
  eval_cmd->add_option("--ratio", args.ratio, "training fraction in [0.2, 0.8]")
      ->check(CLI::Range(0.2, 0.8));
  eval_cmd->add_flag("--sweep", args.sweep, "run the 80/20 .. 20/80 ratio sweep");
  eval_cmd->add_option("--split", args.split, "instance or block hold-out")
      ->check(CLI::IsMember({"instance", "block"}));

  auto* rank_cmd = app.add_subcommand("rank", "biomarker relevance from trained banks");
  add_common(rank_cmd);
  rank_cmd->get_option("--model")->default_str("all");

  auto* report_cmd = app.add_subcommand("report", "human-readable summary tables");
  add_common(report_cmd, false);

  args.model = "glm";
  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return cmd_synth(args, synth_duration);
    if (features_cmd->parsed()) return cmd_features(args);
    if (train_cmd->parsed()) return cmd_train(args);
    if (eval_cmd->parsed()) return cmd_eval(args);
    if (rank_cmd->parsed()) {
      if (!rank_cmd->get_option("--model")->count()) args.model = "all";
      return cmd_rank(args);
    }
    if (report_cmd->parsed()) return cmd_report(args);
  } catch (const Error& e) {
    nlohmann::json err = {{"error", e.code()}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", "Internal"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 2;
  }
  return 0;
}
