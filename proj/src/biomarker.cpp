#include "respira/biomarker.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "respira/errors.hpp"

namespace respira::biomarker {

FeatureWeights feature_weights(const reg::TrainedRegressor& model,
                               const std::string& context) {
  FeatureWeights out;
  out.source = model.kind();
  out.context = context;
  out.w = model.raw_feature_weights();  // throws UnsupportedFamily for SVR
  double sum = std::accumulate(out.w.begin(), out.w.end(), 0.0);
  if (sum <= 0) {
    // A fully uninformative model ranks everything equally.
    for (auto& v : out.w) v = 1.0 / static_cast<double>(out.w.size());
  } else {
    for (auto& v : out.w) v /= sum;
  }
  return out;
}

std::vector<double> merge_stats(const std::vector<double>& w20) {
  if (w20.size() % 2 != 0 || w20.empty())
    throw LayoutMismatch("merge_stats expects the (mean, std) pair layout");
  std::vector<double> out(w20.size() / 2);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = w20[2 * p] + w20[2 * p + 1];
  return out;
}

const ClusterMap& ClusterMap::defaults() {
  // Morphology parameter indices: 0 r_mag, 1 r_prom, 2 r_width, 3 t_mag,
  // 4 t_width, 5 qs_dist, 6 st_dist, 7 bpm, 8 r_power, 9 t_power.
  static const ClusterMap kMap = [] {
    ClusterMap m;
    m.members[0] = {0, 1, 8};  // Rh: R magnitude, prominence, power
    m.members[1] = {2, 5};     // Rw: R width, QS distance
    m.members[2] = {3, 9};     // Th: T magnitude, power
    m.members[3] = {4, 6};     // Tw: T width, ST distance
    m.members[4] = {7};        // RR: heart rhythm
    return m;
  }();
  return kMap;
}

bool ClusterMap::is_partition(int n_params) const {
  std::vector<int> seen(static_cast<std::size_t>(n_params), 0);
  for (const auto& cluster : members)
    for (int idx : cluster) {
      if (idx < 0 || idx >= n_params) return false;
      ++seen[static_cast<std::size_t>(idx)];
    }
  for (int c : seen)
    if (c != 1) return false;
  return true;
}

BiomarkerRelevance cluster_biomarkers(const std::vector<double>& w10,
                                      const ClusterMap& map) {
  BiomarkerRelevance out;
  double sum = 0.0;
  for (int b = 0; b < kBiomarkers; ++b) {
    const auto& cluster = map.members[static_cast<std::size_t>(b)];
    double acc = 0.0;
    for (int idx : cluster) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= w10.size())
        throw LayoutMismatch("cluster index out of range");
      acc += w10[static_cast<std::size_t>(idx)];
    }
    out.rel[static_cast<std::size_t>(b)] =
        cluster.empty() ? 0.0 : acc / static_cast<double>(cluster.size());
    sum += out.rel[static_cast<std::size_t>(b)];
  }
  if (sum > 0)
    for (auto& v : out.rel) v = 100.0 * v / sum;
  return out;
}

BiomarkerRelevance contextual_relevance(
    const std::vector<const reg::TrainedRegressor*>& bank_models,
    const std::string& context, const ClusterMap& map) {
  BiomarkerRelevance out;
  out.context = context;
  int used = 0;
  for (const auto* model : bank_models) {
    if (!model || !model->rankable()) continue;
    const auto fw = feature_weights(*model, context);
    const auto rel = cluster_biomarkers(merge_stats(fw.w), map);
    for (int b = 0; b < kBiomarkers; ++b)
      out.rel[static_cast<std::size_t>(b)] += rel.rel[static_cast<std::size_t>(b)];
    ++used;
  }
  if (used == 0)
    throw NoRankableModels("no ranking-capable models in bank '" + context + "'");
  double sum = 0.0;
  for (auto& v : out.rel) {
    v /= static_cast<double>(used);
    sum += v;
  }
  if (sum > 0)
    for (auto& v : out.rel) v = 100.0 * v / sum;
  return out;
}

void write_relevance_csv(const std::string& path,
                         const std::vector<RelevanceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw MissingFile("cannot write: " + path);
  out << "target,context";
  for (const auto& n : kBiomarkerNames) out << ',' << n;
  out << '\n';
  char buf[40];
  for (const auto& row : rows) {
    out << pipeline::to_string(row.target) << ',' << row.context;
    for (double v : row.rel) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace respira::biomarker
