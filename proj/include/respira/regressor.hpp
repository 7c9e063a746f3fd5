#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "respira/glm.hpp"
#include "respira/forest.hpp"
#include "respira/gpr.hpp"
#include "respira/nca.hpp"
#include "respira/svr.hpp"

namespace respira::reg {

enum class ModelKind { glm, rf, svr, gpr, nca };

ModelKind kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

struct FitOptions {
  std::uint64_t seed = 1;
  GlmOptions glm;
  RfOptions rf;
  SvrOptions svr;
  GprOptions gpr;
  NcaOptions nca;
};

// One trained model of any family behind the uniform fit/predict contract.
class TrainedRegressor {
 public:
  TrainedRegressor() = default;
  explicit TrainedRegressor(GlmModel m) : model_(std::move(m)) {}
  explicit TrainedRegressor(RfModel m) : model_(std::move(m)) {}
  explicit TrainedRegressor(SvrModel m) : model_(std::move(m)) {}
  explicit TrainedRegressor(GprModel m) : model_(std::move(m)) {}
  explicit TrainedRegressor(NcaModel m) : model_(std::move(m)) {}

  ModelKind kind() const;
  double predict(const Eigen::RowVectorXd& x) const;
  int dim() const;

  // Raw (unnormalized) per-feature relevance for the ranking-capable
  // families; throws UnsupportedFamily for SVR.
  std::vector<double> raw_feature_weights() const;
  bool rankable() const { return kind() != ModelKind::svr; }

  template <typename T>
  const T& as() const {
    return std::get<T>(model_);
  }

  nlohmann::json to_json() const;
  static TrainedRegressor from_json(const nlohmann::json& j);

 private:
  std::variant<std::monostate, GlmModel, RfModel, SvrModel, GprModel, NcaModel>
      model_;
};

TrainedRegressor fit(ModelKind kind, const Eigen::MatrixXd& X,
                     const Eigen::VectorXd& y, const FitOptions& opt = {});

}  // namespace respira::reg
