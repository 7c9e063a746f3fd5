#include "respira/regressor.hpp"

#include <cmath>

#include "respira/errors.hpp"

namespace respira::reg {

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json mat_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (int j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Eigen::VectorXd vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

Eigen::MatrixXd mat_from(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<long>(rows.size()), static_cast<long>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<long>(i), static_cast<long>(k)) = rows[i][k];
  return m;
}

nlohmann::json scaler_json(const Standardizer& s) {
  return {{"mean", vec_json(s.mean)}, {"stddev", vec_json(s.stddev)}};
}

Standardizer scaler_from(const nlohmann::json& j) {
  Standardizer s;
  s.mean = vec_from(j.at("mean"));
  s.stddev = vec_from(j.at("stddev"));
  return s;
}

}  // namespace

ModelKind kind_from_string(const std::string& s) {
  if (s == "glm") return ModelKind::glm;
  if (s == "rf") return ModelKind::rf;
  if (s == "svm" || s == "svr") return ModelKind::svr;
  if (s == "gpr") return ModelKind::gpr;
  if (s == "nca") return ModelKind::nca;
  throw BadConfig("unknown model kind: " + s);
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::glm: return "glm";
    case ModelKind::rf: return "rf";
    case ModelKind::svr: return "svm";
    case ModelKind::gpr: return "gpr";
    case ModelKind::nca: return "nca";
  }
  return "unknown";
}

ModelKind TrainedRegressor::kind() const {
  if (std::holds_alternative<GlmModel>(model_)) return ModelKind::glm;
  if (std::holds_alternative<RfModel>(model_)) return ModelKind::rf;
  if (std::holds_alternative<SvrModel>(model_)) return ModelKind::svr;
  if (std::holds_alternative<GprModel>(model_)) return ModelKind::gpr;
  if (std::holds_alternative<NcaModel>(model_)) return ModelKind::nca;
  throw UntrainedModel("regressor holds no model");
}

int TrainedRegressor::dim() const {
  switch (kind()) {
    case ModelKind::glm: return as<GlmModel>().scaler.dim();
    case ModelKind::rf: return as<RfModel>().scaler.dim();
    case ModelKind::svr: return as<SvrModel>().scaler.dim();
    case ModelKind::gpr: return as<GprModel>().scaler.dim();
    case ModelKind::nca: return as<NcaModel>().scaler.dim();
  }
  return 0;
}

double TrainedRegressor::predict(const Eigen::RowVectorXd& x) const {
  if (x.size() != dim())
    throw DimensionMismatch("predict: expected " + std::to_string(dim()) +
                            " features, got " + std::to_string(x.size()));
  switch (kind()) {
    case ModelKind::glm: return as<GlmModel>().predict(x);
    case ModelKind::rf: return as<RfModel>().predict(x);
    case ModelKind::svr: return as<SvrModel>().predict(x);
    case ModelKind::gpr: return as<GprModel>().predict(x);
    case ModelKind::nca: return as<NcaModel>().predict(x);
  }
  throw UntrainedModel("regressor holds no model");
}

std::vector<double> TrainedRegressor::raw_feature_weights() const {
  switch (kind()) {
    case ModelKind::glm: {
      const auto& m = as<GlmModel>();
      std::vector<double> w(static_cast<std::size_t>(m.beta.size()));
      for (int r = 0; r < m.beta.size(); ++r)
        w[static_cast<std::size_t>(r)] = std::fabs(m.beta[r]);
      return w;
    }
    case ModelKind::rf: return as<RfModel>().oob_importance;
    case ModelKind::gpr: return gpr_ard_relevance(as<GprModel>());
    case ModelKind::nca: {
      const auto& m = as<NcaModel>();
      std::vector<double> w(static_cast<std::size_t>(m.weights.size()));
      for (int r = 0; r < m.weights.size(); ++r)
        w[static_cast<std::size_t>(r)] = m.weights[r] * m.weights[r];
      return w;
    }
    case ModelKind::svr:
      throw UnsupportedFamily("SVR exposes no feature weights");
  }
  throw UntrainedModel("regressor holds no model");
}

TrainedRegressor fit(ModelKind kind, const Eigen::MatrixXd& X,
                     const Eigen::VectorXd& y, const FitOptions& opt) {
  switch (kind) {
    case ModelKind::glm: return TrainedRegressor(fit_glm(X, y, opt.glm));
    case ModelKind::rf: {
      RfOptions o = opt.rf;
      o.seed = opt.seed;
      return TrainedRegressor(fit_rf(X, y, o));
    }
    case ModelKind::svr: return TrainedRegressor(fit_svr(X, y, opt.svr));
    case ModelKind::gpr: {
      GprOptions o = opt.gpr;
      o.seed = opt.seed;
      return TrainedRegressor(fit_gpr(X, y, o));
    }
    case ModelKind::nca: return TrainedRegressor(fit_nca(X, y, opt.nca));
  }
  throw BadConfig("unknown model kind");
}

nlohmann::json TrainedRegressor::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind());
  switch (kind()) {
    case ModelKind::glm: {
      const auto& m = as<GlmModel>();
      j["scaler"] = scaler_json(m.scaler);
      j["intercept"] = m.intercept;
      j["beta"] = vec_json(m.beta);
      j["lambda"] = m.lambda;
      j["alpha"] = m.alpha;
      break;
    }
    case ModelKind::rf: {
      const auto& m = as<RfModel>();
      j["scaler"] = scaler_json(m.scaler);
      j["oob_importance"] = m.oob_importance;
      nlohmann::json trees = nlohmann::json::array();
      for (const auto& t : m.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& nd : t.nodes)
          nodes.push_back({{"f", nd.feature},
                           {"t", nd.threshold},
                           {"l", nd.left},
                           {"r", nd.right},
                           {"v", nd.value}});
        trees.push_back(std::move(nodes));
      }
      j["trees"] = std::move(trees);
      break;
    }
    case ModelKind::svr: {
      const auto& m = as<SvrModel>();
      j["scaler"] = scaler_json(m.scaler);
      j["support"] = mat_json(m.support);
      j["dual_coef"] = vec_json(m.dual_coef);
      j["bias"] = m.bias;
      j["epsilon"] = m.epsilon;
      j["box_c"] = m.box_c;
      break;
    }
    case ModelKind::gpr: {
      const auto& m = as<GprModel>();
      j["scaler"] = scaler_json(m.scaler);
      j["train"] = mat_json(m.train);
      j["y"] = vec_json(m.y);
      j["theta"] = vec_json(m.theta);
      j["jitter"] = m.jitter;
      j["log_marginal"] = m.log_marginal;
      break;
    }
    case ModelKind::nca: {
      const auto& m = as<NcaModel>();
      j["scaler"] = scaler_json(m.scaler);
      j["train"] = mat_json(m.train);
      j["y"] = vec_json(m.y);
      j["weights"] = vec_json(m.weights);
      j["lambda"] = m.lambda;
      j["hard_neighbor"] = m.hard_neighbor;
      break;
    }
  }
  return j;
}

TrainedRegressor TrainedRegressor::from_json(const nlohmann::json& j) {
  const ModelKind kind = kind_from_string(j.at("kind").get<std::string>());
  switch (kind) {
    case ModelKind::glm: {
      GlmModel m;
      m.scaler = scaler_from(j.at("scaler"));
      m.intercept = j.at("intercept").get<double>();
      m.beta = vec_from(j.at("beta"));
      m.lambda = j.at("lambda").get<double>();
      m.alpha = j.at("alpha").get<double>();
      return TrainedRegressor(std::move(m));
    }
    case ModelKind::rf: {
      RfModel m;
      m.scaler = scaler_from(j.at("scaler"));
      m.oob_importance = j.at("oob_importance").get<std::vector<double>>();
      for (const auto& jt : j.at("trees")) {
        RfTree tree;
        for (const auto& jn : jt) {
          RfNode nd;
          nd.feature = jn.at("f").get<int>();
          nd.threshold = jn.at("t").get<double>();
          nd.left = jn.at("l").get<int>();
          nd.right = jn.at("r").get<int>();
          nd.value = jn.at("v").get<double>();
          tree.nodes.push_back(nd);
        }
        m.trees.push_back(std::move(tree));
      }
      return TrainedRegressor(std::move(m));
    }
    case ModelKind::svr: {
      SvrModel m;
      m.scaler = scaler_from(j.at("scaler"));
      m.support = mat_from(j.at("support"));
      m.dual_coef = vec_from(j.at("dual_coef"));
      m.bias = j.at("bias").get<double>();
      m.epsilon = j.at("epsilon").get<double>();
      m.box_c = j.at("box_c").get<double>();
      return TrainedRegressor(std::move(m));
    }
    case ModelKind::gpr: {
      GprModel m;
      m.scaler = scaler_from(j.at("scaler"));
      m.train = mat_from(j.at("train"));
      m.y = vec_from(j.at("y"));
      m.theta = vec_from(j.at("theta"));
      m.jitter = j.at("jitter").get<double>();
      m.log_marginal = j.at("log_marginal").get<double>();
      gpr_refit_cache(m);
      return TrainedRegressor(std::move(m));
    }
    case ModelKind::nca: {
      NcaModel m;
      m.scaler = scaler_from(j.at("scaler"));
      m.train = mat_from(j.at("train"));
      m.y = vec_from(j.at("y"));
      m.weights = vec_from(j.at("weights"));
      m.lambda = j.at("lambda").get<double>();
      m.hard_neighbor = j.at("hard_neighbor").get<bool>();
      return TrainedRegressor(std::move(m));
    }
  }
  throw BadConfig("unknown model kind in JSON");
}

}  // namespace respira::reg
