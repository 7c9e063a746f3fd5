#pragma once

#include <array>
#include <string>
#include <vector>

#include "respira/pipeline.hpp"
#include "respira/regressor.hpp"

namespace respira::biomarker {

inline constexpr int kBiomarkers = 5;
inline const std::array<std::string, kBiomarkers> kBiomarkerNames = {
    "Rh", "Rw", "Th", "Tw", "RR"};

// Normalized per-feature weights of one ranking-capable model (GLM |beta|,
// RF permutation importance, GPR ARD relevance, NCA w^2). Throws
// UnsupportedFamily for SVR.
struct FeatureWeights {
  std::vector<double> w;  // sums to 1
  reg::ModelKind source = reg::ModelKind::glm;
  std::string context;
};
FeatureWeights feature_weights(const reg::TrainedRegressor& model,
                               const std::string& context = {});

// Collapses the 20-dim (mean, std) feature layout onto the 10 morphology
// parameters by adding the two statistical branches of each parameter.
std::vector<double> merge_stats(const std::vector<double>& w20);

// Biomarker clusters over the 10 morphology parameters (indices follow
// ecg::BeatMorphology::as_array order). Override to test alternatives.
struct ClusterMap {
  std::array<std::vector<int>, kBiomarkers> members;
  static const ClusterMap& defaults();
  bool is_partition(int n_params = 10) const;
};

struct BiomarkerRelevance {
  std::array<double, kBiomarkers> rel{};  // percent, sums to 100
  std::string context;
  pipeline::Target target = pipeline::Target::br;
};

// Mean of each cluster's member weights, renormalized to 100%.
BiomarkerRelevance cluster_biomarkers(const std::vector<double>& w10,
                                      const ClusterMap& map = ClusterMap::defaults());

// Per-model relevance averaged over the ranking-capable models of one
// context bank, renormalized to 100%. Throws NoRankableModels.
BiomarkerRelevance contextual_relevance(
    const std::vector<const reg::TrainedRegressor*>& bank_models,
    const std::string& context,
    const ClusterMap& map = ClusterMap::defaults());

struct RelevanceRow {
  pipeline::Target target;
  std::string context;
  std::array<double, kBiomarkers> rel{};
};

void write_relevance_csv(const std::string& path,
                         const std::vector<RelevanceRow>& rows);

}  // namespace respira::biomarker
