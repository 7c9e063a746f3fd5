#include "respira/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "respira/data_io.hpp"
#include "respira/errors.hpp"
#include "respira/rng.hpp"

namespace respira::pipeline {

std::string to_string(Target t) { return t == Target::br ? "br" : "ve"; }

Target target_from_string(const std::string& s) {
  if (s == "br") return Target::br;
  if (s == "ve") return Target::ve;
  throw BadConfig("unknown target: " + s);
}

std::vector<WindowedInstance> assemble_instances(
    const std::vector<imu::WindowFeatures>& imu_feats,
    const std::vector<ecg::WindowFeatures>& ecg_feats,
    const std::vector<ResponseWindow>& responses,
    const std::vector<ActivityInterval>& intervals) {
  std::map<std::int64_t, const ecg::WindowFeatures*> ecg_by_t;
  for (const auto& e : ecg_feats) ecg_by_t[e.t_center_ms] = &e;
  std::map<std::int64_t, const ResponseWindow*> resp_by_t;
  for (const auto& r : responses) resp_by_t[r.t_center_ms] = &r;

  std::vector<WindowedInstance> out;
  for (const auto& m : imu_feats) {
    const auto eit = ecg_by_t.find(m.t_center_ms);
    if (eit == ecg_by_t.end()) continue;  // window dropped by the ECG side
    WindowedInstance inst;
    inst.t_center_ms = m.t_center_ms;
    inst.imu_features = m.values;
    inst.ecg_features = eit->second->values;
    if (const auto* iv = io::interval_at(intervals, m.t_center_ms))
      inst.context = iv->activity;
    const auto rit = resp_by_t.find(m.t_center_ms);
    if (rit != resp_by_t.end() && !rit->second->missing) {
      inst.br = rit->second->br_mean;
      inst.ve = rit->second->ve_mean;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

int min_trainable_samples(reg::ModelKind kind) {
  switch (kind) {
    case reg::ModelKind::glm: return 2;
    case reg::ModelKind::rf: return 20;
    case reg::ModelKind::svr: return 2;
    case reg::ModelKind::gpr: return 5;
    case reg::ModelKind::nca: return 5;
  }
  return 2;
}

namespace {

std::optional<double> target_of(const WindowedInstance& inst, Target target) {
  return target == Target::br ? inst.br : inst.ve;
}

Eigen::MatrixXd ecg_matrix(const std::vector<WindowedInstance>& instances,
                           const std::vector<int>& rows) {
  if (rows.empty()) return {};
  const auto d = static_cast<long>(instances[static_cast<std::size_t>(rows[0])]
                                       .ecg_features.size());
  Eigen::MatrixXd X(static_cast<long>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (long j = 0; j < d; ++j)
      X(static_cast<long>(i), j) =
          instances[static_cast<std::size_t>(rows[i])].ecg_features[static_cast<std::size_t>(j)];
  return X;
}

}  // namespace

BankGroup train_banks(const std::vector<WindowedInstance>& instances,
                      reg::ModelKind kind, Target target,
                      const std::vector<std::string>& contexts,
                      const Options& opt) {
  BankGroup group;
  group.target = target;
  group.kind = kind;
  group.tau = opt.tau;
  group.contexts = contexts;

  const int min_n = min_trainable_samples(kind);
  for (std::size_t c = 0; c < contexts.size(); ++c) {
    std::vector<int> rows;
    std::vector<double> ys;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      if (!inst.context || *inst.context != contexts[c]) continue;
      const auto y = target_of(inst, target);
      if (!y) continue;
      rows.push_back(static_cast<int>(i));
      ys.push_back(*y);
    }
    if (static_cast<int>(rows.size()) < min_n)
      throw BankUnderflow("context '" + contexts[c] + "' has " +
                          std::to_string(rows.size()) + " trainable samples, needs " +
                          std::to_string(min_n) + " for " + reg::to_string(kind));
    reg::FitOptions fit = opt.fit;
    fit.seed = Rng(opt.seed).split("bank/" + contexts[c]).next_u64();
    const Eigen::MatrixXd X = ecg_matrix(instances, rows);
    const Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<long>(ys.size()));
    group.banks.push_back(reg::fit(kind, X, y, fit));
  }
  return group;
}

tboost::TotalBoostEnsemble train_classifier(
    const std::vector<WindowedInstance>& instances, const Options& opt) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < instances.size(); ++i)
    if (instances[i].context) rows.push_back(static_cast<int>(i));
  if (rows.empty()) throw InsufficientData("no context-labeled instances");

  const auto d = static_cast<long>(instances[static_cast<std::size_t>(rows[0])]
                                       .imu_features.size());
  Eigen::MatrixXd X(static_cast<long>(rows.size()), d);
  std::vector<std::string> y;
  y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& inst = instances[static_cast<std::size_t>(rows[i])];
    for (long j = 0; j < d; ++j)
      X(static_cast<long>(i), j) = inst.imu_features[static_cast<std::size_t>(j)];
    y.push_back(*inst.context);
  }
  return tboost::totalboost_train(X, y, opt.boost);
}

Pipeline train_pipeline(const std::vector<WindowedInstance>& instances,
                        reg::ModelKind kind, Target target, const Options& opt) {
  Pipeline p;
  p.classifier = train_classifier(instances, opt);
  p.banks = train_banks(instances, kind, target, p.classifier.classes, opt);
  return p;
}

double aggregate(const std::vector<double>& posterior,
                 const std::vector<double>& bank_preds, double tau) {
  if (posterior.size() != bank_preds.size() || posterior.empty())
    throw DimensionMismatch("aggregate: posterior/bank size mismatch");
  std::size_t best = 0;
  for (std::size_t m = 1; m < posterior.size(); ++m)
    if (posterior[m] > posterior[best]) best = m;
  if (posterior[best] >= tau) return bank_preds[best];
  double acc = 0.0;
  for (std::size_t m = 0; m < posterior.size(); ++m)
    acc += posterior[m] * bank_preds[m];
  return acc;
}

EvalResult evaluate(const BankGroup& group,
                    const tboost::TotalBoostEnsemble& classifier,
                    const std::vector<WindowedInstance>& test,
                    const reg::TrainedRegressor* agnostic) {
  if (test.empty()) throw EmptyTestSet("evaluate: empty test set");
  const std::size_t m = group.contexts.size();

  EvalResult res;
  res.confusion.assign(m, std::vector<int>(m, 0));
  res.tpr.assign(m, 0.0);
  res.fnr.assign(m, 0.0);

  auto context_index = [&](const std::string& c) -> int {
    for (std::size_t i = 0; i < group.contexts.size(); ++i)
      if (group.contexts[i] == c) return static_cast<int>(i);
    return -1;
  };

  double abs_err = 0.0, abs_err_agn = 0.0;
  int n_scored = 0;
  std::map<std::string, std::pair<double, int>> per_context;
  int n_labeled = 0, n_correct = 0;

  for (const auto& inst : test) {
    Eigen::RowVectorXd imu_x = Eigen::Map<const Eigen::RowVectorXd>(
        inst.imu_features.data(), static_cast<long>(inst.imu_features.size()));
    Eigen::RowVectorXd ecg_x = Eigen::Map<const Eigen::RowVectorXd>(
        inst.ecg_features.data(), static_cast<long>(inst.ecg_features.size()));

    const auto post = tboost::predict_posterior(classifier, imu_x);
    PredictionRecord rec;
    rec.t_center_ms = inst.t_center_ms;
    rec.posterior = post.p;
    rec.bank_preds.resize(m);
    for (std::size_t c = 0; c < m; ++c)
      rec.bank_preds[c] = group.banks[c].predict(ecg_x);
    rec.aggregated = aggregate(rec.posterior, rec.bank_preds, group.tau);
    rec.predicted_context = classifier.classes[static_cast<std::size_t>(post.argmax())];

    if (inst.context) {
      rec.true_context = *inst.context;
      const int ti = context_index(*inst.context);
      const int pi = post.argmax();
      if (ti >= 0) {
        ++n_labeled;
        ++res.confusion[static_cast<std::size_t>(ti)][static_cast<std::size_t>(pi)];
        if (ti == pi) ++n_correct;
      }
    }
    const auto y = target_of(inst, group.target);
    if (y) {
      rec.truth = *y;
      abs_err += std::fabs(rec.aggregated - *y);
      ++n_scored;
      if (inst.context) {
        auto& slot = per_context[*inst.context];
        slot.first += std::fabs(rec.aggregated - *y);
        ++slot.second;
      }
      if (agnostic) abs_err_agn += std::fabs(agnostic->predict(ecg_x) - *y);
    }
    res.records.push_back(std::move(rec));
  }

  res.n_test = static_cast<int>(test.size());
  res.accuracy = n_labeled > 0 ? static_cast<double>(n_correct) / n_labeled : 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    int row_total = 0;
    for (std::size_t p = 0; p < m; ++p) row_total += res.confusion[c][p];
    if (row_total > 0) {
      res.tpr[c] = static_cast<double>(res.confusion[c][c]) / row_total;
      res.fnr[c] = 1.0 - res.tpr[c];
    }
  }
  res.mae = n_scored > 0 ? abs_err / n_scored : 0.0;
  for (const auto& [ctx, acc] : per_context)
    res.mae_per_context[ctx] = acc.second > 0 ? acc.first / acc.second : 0.0;
  if (agnostic && n_scored > 0) res.mae_agnostic = abs_err_agn / n_scored;
  return res;
}

SplitIndices stratified_split(const std::vector<WindowedInstance>& instances,
                              double train_fraction, SplitMode mode,
                              std::uint64_t seed) {
  std::map<std::string, std::vector<int>> by_context;
  std::vector<int> unlabeled;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].context)
      by_context[*instances[i].context].push_back(static_cast<int>(i));
    else
      unlabeled.push_back(static_cast<int>(i));
  }

  SplitIndices out;
  Rng root(seed);
  for (auto& [ctx, rows] : by_context) {
    // rows are in time order already (instances come off the window clock)
    if (mode == SplitMode::instance) {
      Rng r = root.split("split/" + ctx);
      r.shuffle(rows);
    }
    const auto k = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(rows.size())));
    const std::size_t n_train = std::min(rows.size() - 1, std::max<std::size_t>(1, k));
    for (std::size_t i = 0; i < rows.size(); ++i)
      (i < n_train ? out.train : out.test).push_back(rows[i]);
  }
  // Unlabeled windows are only ever useful for inference.
  for (int i : unlabeled) out.test.push_back(i);
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<SweepEntry> holdout_sweep(const std::vector<WindowedInstance>& instances,
                                      reg::ModelKind kind, Target target,
                                      const std::vector<std::string>& contexts,
                                      const SweepOptions& opt) {
  std::vector<SweepEntry> out;
  for (double ratio : opt.ratios) {
    const auto split = stratified_split(instances, ratio, opt.mode,
                                        Rng(opt.pipeline.seed)
                                            .split("ratio/" + std::to_string(ratio))
                                            .next_u64());
    std::vector<WindowedInstance> train, test;
    for (int i : split.train) train.push_back(instances[static_cast<std::size_t>(i)]);
    for (int i : split.test) test.push_back(instances[static_cast<std::size_t>(i)]);

    Options popt = opt.pipeline;
    popt.seed = Rng(opt.pipeline.seed).split("sweep/" + std::to_string(ratio)).next_u64();

    Pipeline pipe;
    pipe.classifier = train_classifier(train, popt);
    // Bank order follows the caller's context list when given.
    const auto& ctxs = contexts.empty() ? pipe.classifier.classes : contexts;
    pipe.banks = train_banks(train, kind, target, ctxs, popt);

    // Context-agnostic comparison: same family on the pooled training set.
    std::vector<int> rows;
    std::vector<double> ys;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const auto y = target_of(train[i], target);
      if (!y) continue;
      rows.push_back(static_cast<int>(i));
      ys.push_back(*y);
    }
    reg::FitOptions fit = popt.fit;
    fit.seed = Rng(popt.seed).split("agnostic").next_u64();
    const Eigen::MatrixXd Xa = ecg_matrix(train, rows);
    const Eigen::VectorXd ya =
        Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<long>(ys.size()));
    const reg::TrainedRegressor agnostic = reg::fit(kind, Xa, ya, fit);

    SweepEntry entry;
    entry.train_fraction = ratio;
    entry.n_train = static_cast<int>(train.size());
    entry.result = evaluate(pipe.banks, pipe.classifier, test, &agnostic);
    out.push_back(std::move(entry));
  }
  return out;
}

std::string bundle_to_json(const Pipeline& p) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["classifier"] = nlohmann::json::parse(tboost::to_json(p.classifier));
  j["target"] = to_string(p.banks.target);
  j["kind"] = reg::to_string(p.banks.kind);
  j["tau"] = p.banks.tau;
  j["contexts"] = p.banks.contexts;
  nlohmann::json banks = nlohmann::json::array();
  for (const auto& b : p.banks.banks) banks.push_back(b.to_json());
  j["banks"] = std::move(banks);
  return j.dump();
}

Pipeline bundle_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Pipeline p;
  p.classifier = tboost::ensemble_from_json(j.at("classifier").dump());
  p.banks.target = target_from_string(j.at("target").get<std::string>());
  p.banks.kind = reg::kind_from_string(j.at("kind").get<std::string>());
  p.banks.tau = j.at("tau").get<double>();
  p.banks.contexts = j.at("contexts").get<std::vector<std::string>>();
  for (const auto& jb : j.at("banks"))
    p.banks.banks.push_back(reg::TrainedRegressor::from_json(jb));
  return p;
}

}  // namespace respira::pipeline
