#include "notchkit/model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "notchkit/errors.hpp"

namespace notchkit {

using ordered_json = nlohmann::ordered_json;

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::naive: return "naive";
    case ModelKind::linear: return "linear";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

const char* to_string(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "naive") return ModelKind::naive;
  if (s == "linear") return ModelKind::linear;
  if (s == "mlp") return ModelKind::mlp;
  throw DataError("unknown model kind: '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw DataError("unknown activation: '" + s + "'");
}

std::string ModelSpec::summary() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind == ModelKind::mlp) {
    os << "(" << hidden_layers << "x" << hidden_units << " " << to_string(activation)
       << " lr=" << learning_rate << " batch=" << batch_size
       << " epochs<=" << max_epochs << " patience=" << patience;
    if (!replicates_reference()) os << " non-replication";
    os << ")";
  } else if (kind == ModelKind::linear) {
    os << "(ridge=" << ridge << ")";
  }
  return os.str();
}

void MlpParams::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

void MlpParams::axpy(double alpha, const MlpParams& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += alpha * other.weights[l];
    biases[l] += alpha * other.biases[l];
  }
}

TrainedModel train_naive(const std::vector<double>& labels_hz) {
  if (labels_hz.empty()) throw DataError("naive model needs at least one label");
  double sum = 0;
  for (double v : labels_hz) sum += v;
  TrainedModel m;
  m.spec.kind = ModelKind::naive;
  m.naive_mean_hz = sum / static_cast<double>(labels_hz.size());
  return m;
}

TrainedModel train_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y_hz,
                          double ridge) {
  const auto n = X.rows();
  const auto f = X.cols();
  if (n != y_hz.size()) throw DataError("X and y row counts differ");
  if (n < f + 1) {
    throw DataError("linear model needs at least " + std::to_string(f + 1) +
                    " examples, got " + std::to_string(n));
  }
  if (ridge < 0) throw DataError("ridge must be >= 0");

  Eigen::MatrixXd A(n, f + 1);
  A.leftCols(f) = X;
  A.col(f).setOnes();

  Eigen::MatrixXd G = A.transpose() * A;
  for (Eigen::Index i = 0; i < f; ++i) G(i, i) += ridge;  // bias unpenalized
  const Eigen::VectorXd rhs = A.transpose() * y_hz;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
  if (!lu.isInvertible()) {
    throw NumericError(
        "normal equations are singular at ridge=" + std::to_string(ridge) +
        "; the feature matrix is rank-deficient, set ridge > 0");
  }
  const Eigen::VectorXd theta = lu.solve(rhs);

  TrainedModel m;
  m.spec.kind = ModelKind::linear;
  m.spec.ridge = ridge;
  m.linear_weights = theta.head(f);
  m.linear_bias = theta(f);
  return m;
}

MlpParams mlp_init(const ModelSpec& spec, Rng& rng) {
  if (spec.hidden_layers < 1) throw DataError("mlp needs at least one hidden layer");
  if (spec.hidden_units < 1) throw DataError("mlp needs at least one hidden unit");
  std::vector<int> sizes;
  sizes.push_back(9);
  for (int l = 0; l < spec.hidden_layers; ++l) sizes.push_back(spec.hidden_units);
  sizes.push_back(1);

  MlpParams p;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

namespace {

inline Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

inline Eigen::MatrixXd activate_deriv(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::relu) {
    return (z.array() > 0.0).cast<double>().matrix();
  }
  return (1.0 - z.array().tanh().square()).matrix();
}

}  // namespace

Eigen::VectorXd mlp_forward(const MlpParams& p, Activation act,
                            const Eigen::MatrixXd& X) {
  Eigen::MatrixXd a = X.transpose();  // (features x batch)
  const std::size_t layers = p.weights.size();
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Eigen::MatrixXd z = (p.weights[l] * a).colwise() + p.biases[l];
    a = activate(z, act);
  }
  Eigen::MatrixXd out =
      (p.weights[layers - 1] * a).colwise() + p.biases[layers - 1];
  return out.row(0).transpose();
}

double mlp_loss(const MlpParams& p, Activation act, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y) {
  const Eigen::VectorXd pred = mlp_forward(p, act, X);
  return (pred - y).squaredNorm() / static_cast<double>(y.size());
}

double mlp_loss_and_grad(const MlpParams& p, Activation act,
                         const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         MlpParams& grad) {
  const std::size_t layers = p.weights.size();
  const double n = static_cast<double>(y.size());

  std::vector<Eigen::MatrixXd> acts;   // acts[l]: input to layer l
  std::vector<Eigen::MatrixXd> zs;     // preactivations of hidden layers
  acts.reserve(layers + 1);
  acts.push_back(X.transpose());
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Eigen::MatrixXd z = (p.weights[l] * acts.back()).colwise() + p.biases[l];
    acts.push_back(activate(z, act));
    zs.push_back(std::move(z));
  }
  const Eigen::MatrixXd out =
      (p.weights[layers - 1] * acts.back()).colwise() + p.biases[layers - 1];

  const Eigen::RowVectorXd err = out.row(0) - y.transpose();
  const double loss = err.squaredNorm() / n;

  if (grad.weights.size() != layers) {
    grad.weights.assign(layers, Eigen::MatrixXd());
    grad.biases.assign(layers, Eigen::VectorXd());
  }

  // d(loss)/d(out)
  Eigen::MatrixXd delta = (2.0 / n) * err;
  grad.weights[layers - 1] = delta * acts[layers - 1].transpose();
  grad.biases[layers - 1] = delta.rowwise().sum();

  for (std::size_t l = layers - 1; l-- > 0;) {
    const Eigen::MatrixXd upstream = p.weights[l + 1].transpose() * delta;
    delta = upstream.cwiseProduct(activate_deriv(zs[l], act));
    grad.weights[l] = delta * acts[l].transpose();
    grad.biases[l] = delta.rowwise().sum();
  }
  return loss;
}

namespace {

double rms(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

struct AdamState {
  MlpParams m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit AdamState(const MlpParams& shape) : m(shape), v(shape) {
    m.set_zero();
    v.set_zero();
  }

  void step(MlpParams& params, const MlpParams& grad, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      m.weights[l] = beta1 * m.weights[l] + (1.0 - beta1) * grad.weights[l];
      v.weights[l].array() = beta2 * v.weights[l].array() +
                             (1.0 - beta2) * grad.weights[l].array().square();
      params.weights[l].array() -=
          lr * (m.weights[l].array() / c1) /
          ((v.weights[l].array() / c2).sqrt() + eps);

      m.biases[l] = beta1 * m.biases[l] + (1.0 - beta1) * grad.biases[l];
      v.biases[l].array() = beta2 * v.biases[l].array() +
                            (1.0 - beta2) * grad.biases[l].array().square();
      params.biases[l].array() -=
          lr * (m.biases[l].array() / c1) /
          ((v.biases[l].array() / c2).sqrt() + eps);
    }
  }
};

}  // namespace

TrainedModel train_mlp(const Eigen::MatrixXd& X_train,
                       const Eigen::VectorXd& y_train_hz,
                       const Eigen::MatrixXd& X_val,
                       const Eigen::VectorXd& y_val_hz, const ModelSpec& spec) {
  if (spec.kind != ModelKind::mlp) throw DataError("spec.kind must be mlp");
  if (X_train.rows() == 0) throw DataError("empty training set");
  if (X_val.rows() == 0) throw DataError("empty validation set");
  if (X_train.rows() != y_train_hz.size() || X_val.rows() != y_val_hz.size()) {
    throw DataError("feature/label row counts differ");
  }
  if (spec.batch_size < 1) throw DataError("batch_size must be >= 1");

  // Targets in kHz keep the loss near unity; reports stay in Hz.
  const Eigen::VectorXd y_train = y_train_hz / 1000.0;
  const Eigen::VectorXd y_val = y_val_hz / 1000.0;
  const auto n = X_train.rows();

  Rng rng(spec.seed);
  MlpParams params = mlp_init(spec, rng);
  MlpParams grad = params;
  AdamState adam(params);

  TrainedModel model;
  model.spec = spec;

  MlpParams best = params;
  double best_val = std::numeric_limits<double>::infinity();
  int since_improve = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 1; epoch <= spec.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (Eigen::Index start = 0; start < n; start += spec.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(spec.batch_size, n - start);
      Eigen::MatrixXd Xb(b, X_train.cols());
      Eigen::VectorXd yb(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        Xb.row(i) = X_train.row(order[static_cast<std::size_t>(start + i)]);
        yb(i) = y_train(order[static_cast<std::size_t>(start + i)]);
      }
      const double loss = mlp_loss_and_grad(params, spec.activation, Xb, yb, grad);
      if (!std::isfinite(loss)) {
        throw NumericError("mlp training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch) +
                           "; reduce the learning rate");
      }
      adam.step(params, grad, spec.learning_rate);
    }

    const double train_rms_hz =
        1000.0 * rms(mlp_forward(params, spec.activation, X_train), y_train);
    const double val_rms_hz =
        1000.0 * rms(mlp_forward(params, spec.activation, X_val), y_val);
    if (!std::isfinite(val_rms_hz)) {
      throw NumericError("mlp training diverged (non-finite validation) at epoch " +
                         std::to_string(epoch));
    }
    model.training_log.push_back({epoch, train_rms_hz, val_rms_hz});

    if (val_rms_hz < best_val) {
      best_val = val_rms_hz;
      best = params;
      since_improve = 0;
    } else if (++since_improve >= spec.patience) {
      break;
    }
  }

  model.mlp = std::move(best);
  return model;
}

double predict_normalized(const TrainedModel& m, const Eigen::VectorXd& x) {
  switch (m.spec.kind) {
    case ModelKind::naive:
      return m.naive_mean_hz;
    case ModelKind::linear:
      return m.linear_weights.dot(x) + m.linear_bias;
    case ModelKind::mlp: {
      Eigen::MatrixXd X(1, x.size());
      X.row(0) = x.transpose();
      return 1000.0 * mlp_forward(m.mlp, m.spec.activation, X)(0);
    }
  }
  throw DataError("unknown model kind");
}

double predict(const TrainedModel& m, const AnthroVector& v) {
  if (m.spec.kind == ModelKind::naive) return m.naive_mean_hz;
  if (!m.normalizer) {
    throw DataError("model has no normalizer; attach the one fitted on its "
                    "training split");
  }
  const auto z = m.normalizer->apply(v);
  Eigen::VectorXd x(9);
  for (int i = 0; i < 9; ++i) x(i) = z[static_cast<std::size_t>(i)];
  return predict_normalized(m, x);
}

double gradient_check(const ModelSpec& spec, int n_probes) {
  if (spec.kind != ModelKind::mlp) throw DataError("gradient_check needs an mlp spec");
  constexpr double kStep = 1e-4;
  constexpr double kKinkClearance = 1e-3;
  constexpr int kBatch = 8;
  constexpr int kCoordsPerProbe = 30;

  Rng rng(mix_seed(spec.seed, 77));
  double worst = 0.0;

  for (int probe = 0; probe < n_probes; ++probe) {
    MlpParams params = mlp_init(spec, rng);

    // Draw inputs; for relu, redraw until every hidden preactivation clears
    // the kink, so central differences see a smooth function.
    Eigen::MatrixXd X(kBatch, 9);
    Eigen::VectorXd y(kBatch);
    bool clean = false;
    for (int attempt = 0; attempt < 500 && !clean; ++attempt) {
      for (int r = 0; r < kBatch; ++r) {
        for (int c = 0; c < 9; ++c) X(r, c) = rng.gaussian();
        y(r) = rng.uniform(5.5, 11.5);  // kHz scale
      }
      if (spec.activation != Activation::relu) {
        clean = true;
        break;
      }
      double min_abs = std::numeric_limits<double>::infinity();
      Eigen::MatrixXd a = X.transpose();
      for (std::size_t l = 0; l + 1 < params.weights.size(); ++l) {
        Eigen::MatrixXd z = (params.weights[l] * a).colwise() + params.biases[l];
        min_abs = std::min(min_abs, z.array().abs().minCoeff());
        a = activate(z, spec.activation);
      }
      clean = min_abs > kKinkClearance;
    }
    if (!clean) {
      throw NumericError("gradient_check could not find a kink-free probe");
    }

    MlpParams analytic = params;
    mlp_loss_and_grad(params, spec.activation, X, y, analytic);

    double gmax = 0.0;
    for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
      gmax = std::max(gmax, analytic.weights[l].array().abs().maxCoeff());
      gmax = std::max(gmax, analytic.biases[l].array().abs().maxCoeff());
    }
    // Deviations are measured against the gradient's own scale; a 1% floor
    // keeps roundoff on near-zero coordinates from dominating.
    const double floor = std::max(0.01 * gmax, 1e-8);

    const std::size_t n_layers = params.weights.size();
    for (int c = 0; c < kCoordsPerProbe; ++c) {
      const std::size_t l = static_cast<std::size_t>(rng.below(n_layers));
      const bool in_bias = rng.uniform() < 0.1;
      double* slot = nullptr;
      double a_val = 0;
      if (in_bias) {
        const auto i = static_cast<Eigen::Index>(
            rng.below(static_cast<std::uint64_t>(params.biases[l].size())));
        slot = &params.biases[l](i);
        a_val = analytic.biases[l](i);
      } else {
        const auto i = static_cast<Eigen::Index>(
            rng.below(static_cast<std::uint64_t>(params.weights[l].size())));
        slot = params.weights[l].data() + i;
        a_val = analytic.weights[l].data()[i];
      }
      const double saved = *slot;
      *slot = saved + kStep;
      const double lp = mlp_loss(params, spec.activation, X, y);
      *slot = saved - kStep;
      const double lm = mlp_loss(params, spec.activation, X, y);
      *slot = saved;
      const double fd = (lp - lm) / (2.0 * kStep);
      const double rel =
          std::abs(a_val - fd) / std::max({std::abs(a_val), std::abs(fd), floor});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

namespace {

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j) {
  const auto rows = j.size();
  const auto cols = rows ? j[0].size() : 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r),
                                             static_cast<Eigen::Index>(c)) =
        j[r][c].get<double>();
  }
  return m;
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const ordered_json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

}  // namespace

void save_model(const TrainedModel& m, const std::filesystem::path& path) {
  ordered_json j;
  j["format"] = "notchkit-model";
  j["version"] = 1;
  j["spec"] = {{"kind", to_string(m.spec.kind)},
               {"hidden_units", m.spec.hidden_units},
               {"hidden_layers", m.spec.hidden_layers},
               {"activation", to_string(m.spec.activation)},
               {"learning_rate", m.spec.learning_rate},
               {"batch_size", m.spec.batch_size},
               {"max_epochs", m.spec.max_epochs},
               {"patience", m.spec.patience},
               {"ridge", m.spec.ridge},
               {"seed", m.spec.seed}};
  if (m.normalizer) {
    ordered_json mean = ordered_json::array(), stddev = ordered_json::array();
    for (double v : m.normalizer->mean()) mean.push_back(v);
    for (double v : m.normalizer->stddev()) stddev.push_back(v);
    j["normalizer"] = {{"mean", std::move(mean)}, {"std", std::move(stddev)}};
  } else {
    j["normalizer"] = nullptr;
  }
  switch (m.spec.kind) {
    case ModelKind::naive:
      j["naive_mean_hz"] = m.naive_mean_hz;
      break;
    case ModelKind::linear:
      j["linear"] = {{"weights", vector_to_json(m.linear_weights)},
                     {"bias", m.linear_bias}};
      break;
    case ModelKind::mlp: {
      ordered_json ws = ordered_json::array(), bs = ordered_json::array();
      for (const auto& w : m.mlp.weights) ws.push_back(matrix_to_json(w));
      for (const auto& b : m.mlp.biases) bs.push_back(vector_to_json(b));
      j["mlp"] = {{"weights", std::move(ws)}, {"biases", std::move(bs)}};
      break;
    }
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("cannot write model snapshot: " + path.string());
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model snapshot: " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw DataError("malformed model snapshot " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "notchkit-model" || j.value("version", 0) != 1) {
    throw DataError("unsupported model snapshot format in " + path.string());
  }
  TrainedModel m;
  const auto& s = j.at("spec");
  m.spec.kind = model_kind_from_string(s.at("kind").get<std::string>());
  m.spec.hidden_units = s.at("hidden_units").get<int>();
  m.spec.hidden_layers = s.at("hidden_layers").get<int>();
  m.spec.activation = activation_from_string(s.at("activation").get<std::string>());
  m.spec.learning_rate = s.at("learning_rate").get<double>();
  m.spec.batch_size = s.at("batch_size").get<int>();
  m.spec.max_epochs = s.at("max_epochs").get<int>();
  m.spec.patience = s.at("patience").get<int>();
  m.spec.ridge = s.at("ridge").get<double>();
  m.spec.seed = s.at("seed").get<std::uint64_t>();

  if (!j.at("normalizer").is_null()) {
    std::array<double, 9> mean{}, stddev{};
    for (int i = 0; i < 9; ++i) {
      mean[i] = j["normalizer"]["mean"][i].get<double>();
      stddev[i] = j["normalizer"]["std"][i].get<double>();
    }
    m.normalizer = Normalizer(mean, stddev);
  }
  switch (m.spec.kind) {
    case ModelKind::naive:
      m.naive_mean_hz = j.at("naive_mean_hz").get<double>();
      break;
    case ModelKind::linear:
      m.linear_weights = vector_from_json(j.at("linear").at("weights"));
      m.linear_bias = j.at("linear").at("bias").get<double>();
      break;
    case ModelKind::mlp:
      for (const auto& w : j.at("mlp").at("weights")) {
        m.mlp.weights.push_back(matrix_from_json(w));
      }
      for (const auto& b : j.at("mlp").at("biases")) {
        m.mlp.biases.push_back(vector_from_json(b));
      }
      break;
  }
  return m;
}

}  // namespace notchkit
