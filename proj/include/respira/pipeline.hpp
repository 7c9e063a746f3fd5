#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "respira/ecg_features.hpp"
#include "respira/imu_features.hpp"
#include "respira/regressor.hpp"
#include "respira/totalboost.hpp"
#include "respira/types.hpp"

namespace respira::pipeline {

enum class Target { br, ve };
std::string to_string(Target t);
Target target_from_string(const std::string& s);

// Joins per-window IMU features, ECG features, response labels and activity
// intervals on the shared window clock. Windows missing the ECG instance
// are dropped; missing labels/context stay as empty optionals.
std::vector<WindowedInstance> assemble_instances(
    const std::vector<imu::WindowFeatures>& imu_feats,
    const std::vector<ecg::WindowFeatures>& ecg_feats,
    const std::vector<ResponseWindow>& responses,
    const std::vector<ActivityInterval>& intervals);

struct Options {
  double tau = 0.8;  // posterior level above which one bank is selected
  std::uint64_t seed = 1;
  reg::FitOptions fit;
  tboost::TrainOptions boost;
};

// One regression bank per context, all of one family and one target.
struct BankGroup {
  Target target = Target::br;
  reg::ModelKind kind = reg::ModelKind::glm;
  double tau = 0.8;
  std::vector<std::string> contexts;
  std::vector<reg::TrainedRegressor> banks;  // aligned with contexts
};

// Smallest training-set size each family accepts.
int min_trainable_samples(reg::ModelKind kind);

// Trains one bank per context on that context's labeled instances. Throws
// BankUnderflow when a context has too few trainable samples.
BankGroup train_banks(const std::vector<WindowedInstance>& instances,
                      reg::ModelKind kind, Target target,
                      const std::vector<std::string>& contexts,
                      const Options& opt);

// Context classifier trained independently on (imu features, context).
tboost::TotalBoostEnsemble train_classifier(
    const std::vector<WindowedInstance>& instances, const Options& opt);

struct Pipeline {
  tboost::TotalBoostEnsemble classifier;
  BankGroup banks;
};
Pipeline train_pipeline(const std::vector<WindowedInstance>& instances,
                        reg::ModelKind kind, Target target, const Options& opt);

// Posterior-conditioned aggregation: select the argmax bank when its
// posterior reaches tau, otherwise posterior-weighted averaging. Argmax
// ties break toward the lowest context index.
double aggregate(const std::vector<double>& posterior,
                 const std::vector<double>& bank_preds, double tau);

struct PredictionRecord {
  std::int64_t t_center_ms = 0;
  std::vector<double> posterior;
  std::vector<double> bank_preds;
  double aggregated = 0.0;
  std::optional<double> truth;
  std::string true_context;  // empty when unlabeled
  std::string predicted_context;
};

struct EvalResult {
  // classifier metrics over labeled test instances
  double accuracy = 0.0;
  std::vector<double> tpr, fnr;            // per context, bank order
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  // regression metrics over labeled test instances
  double mae = 0.0;
  std::map<std::string, double> mae_per_context;
  double mae_agnostic = std::numeric_limits<double>::quiet_NaN();
  int n_test = 0;
  std::vector<PredictionRecord> records;
};

// Scores the trained pipeline on test instances; when agnostic is non-null
// its MAE on the same instances is reported alongside.
EvalResult evaluate(const BankGroup& group,
                    const tboost::TotalBoostEnsemble& classifier,
                    const std::vector<WindowedInstance>& test,
                    const reg::TrainedRegressor* agnostic = nullptr);

enum class SplitMode { instance, block };

struct SplitIndices {
  std::vector<int> train, test;
};
// Stratified-by-context split; block mode keeps each context's instances in
// time order and cuts once.
SplitIndices stratified_split(const std::vector<WindowedInstance>& instances,
                              double train_fraction, SplitMode mode,
                              std::uint64_t seed);

struct SweepEntry {
  double train_fraction = 0.0;
  int n_train = 0;
  EvalResult result;
};

struct SweepOptions {
  std::vector<double> ratios = {0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2};
  SplitMode mode = SplitMode::instance;
  Options pipeline;
};

// Hold-out protocol: per ratio trains classifier + banks + a
// context-agnostic model of the same kind on the train side and evaluates
// on the held-out side.
std::vector<SweepEntry> holdout_sweep(const std::vector<WindowedInstance>& instances,
                                      reg::ModelKind kind, Target target,
                                      const std::vector<std::string>& contexts,
                                      const SweepOptions& opt);

std::string bundle_to_json(const Pipeline& p);
Pipeline bundle_from_json(const std::string& text);

}  // namespace respira::pipeline
