#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfel/error.hpp"
#include "mfel/ml/logistic.hpp"
#include "mfel/split.hpp"
#include "mfel/util.hpp"

namespace mfel::ml {

struct MlpParams {
  std::vector<std::size_t> hidden{256, 128, 64};
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double dropout = 0.5;
  std::size_t epochs = 100;
  double validation_fraction = 0.1;  // 0 disables early stopping
  std::size_t patience = 10;
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-7;
};

// Dense -> ReLU -> Dropout -> BatchNorm.
struct DenseBlock {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;

  bool operator==(const DenseBlock& o) const {
    return W.rows() == o.W.rows() && W.cols() == o.W.cols() && W == o.W && b == o.b &&
           gamma == o.gamma && beta == o.beta && running_mean == o.running_mean &&
           running_var == o.running_var;
  }
};

struct MlpModel {
  std::vector<DenseBlock> blocks;
  Eigen::VectorXd out_w;
  double out_b = 0.0;
  double dropout = 0.5;
  double bn_eps = 1e-5;
  std::size_t input_dim = 0;
  std::vector<double> train_loss;  // mean batch loss per epoch
  std::vector<double> val_loss;    // empty without a validation fold
  std::size_t best_epoch = 0;

  bool operator==(const MlpModel& o) const {
    return blocks == o.blocks && out_w.size() == o.out_w.size() && out_w == o.out_w &&
           out_b == o.out_b && dropout == o.dropout && bn_eps == o.bn_eps &&
           input_dim == o.input_dim && train_loss == o.train_loss && val_loss == o.val_loss &&
           best_epoch == o.best_epoch;
  }

  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);
};

namespace detail {

inline nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json mat_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

inline Eigen::MatrixXd json_mat(const nlohmann::json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = json_vec(j[r]);
    if (row.size() != cols) throw DimensionMismatch(static_cast<std::size_t>(cols), static_cast<std::size_t>(row.size()));
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

}  // namespace detail

inline nlohmann::json MlpModel::to_json() const {
  nlohmann::json jb = nlohmann::json::array();
  for (const auto& blk : blocks)
    jb.push_back({{"W", detail::mat_json(blk.W)},
                  {"b", detail::vec_json(blk.b)},
                  {"gamma", detail::vec_json(blk.gamma)},
                  {"beta", detail::vec_json(blk.beta)},
                  {"running_mean", detail::vec_json(blk.running_mean)},
                  {"running_var", detail::vec_json(blk.running_var)}});
  return {{"blocks", jb},
          {"out_w", detail::vec_json(out_w)},
          {"out_b", out_b},
          {"dropout", dropout},
          {"bn_eps", bn_eps},
          {"input_dim", input_dim},
          {"train_loss", train_loss},
          {"val_loss", val_loss},
          {"best_epoch", best_epoch}};
}

inline MlpModel MlpModel::from_json(const nlohmann::json& j) {
  MlpModel m;
  m.input_dim = j.at("input_dim").get<std::size_t>();
  auto in = static_cast<Eigen::Index>(m.input_dim);
  for (const auto& jb : j.at("blocks")) {
    DenseBlock blk;
    blk.W = detail::json_mat(jb.at("W"), in);
    blk.b = detail::json_vec(jb.at("b"));
    blk.gamma = detail::json_vec(jb.at("gamma"));
    blk.beta = detail::json_vec(jb.at("beta"));
    blk.running_mean = detail::json_vec(jb.at("running_mean"));
    blk.running_var = detail::json_vec(jb.at("running_var"));
    const auto out = blk.W.rows();
    for (const auto* v : {&blk.b, &blk.gamma, &blk.beta, &blk.running_mean, &blk.running_var})
      if (v->size() != out) throw DimensionMismatch(static_cast<std::size_t>(out), static_cast<std::size_t>(v->size()));
    in = out;
    m.blocks.push_back(std::move(blk));
  }
  m.out_w = detail::json_vec(j.at("out_w"));
  if (m.out_w.size() != in) throw DimensionMismatch(static_cast<std::size_t>(in), static_cast<std::size_t>(m.out_w.size()));
  m.out_b = j.at("out_b").get<double>();
  m.dropout = j.at("dropout").get<double>();
  m.bn_eps = j.at("bn_eps").get<double>();
  m.train_loss = j.at("train_loss").get<std::vector<double>>();
  m.val_loss = j.at("val_loss").get<std::vector<double>>();
  m.best_epoch = j.at("best_epoch").get<std::size_t>();
  return m;
}

// Visits every trainable tensor in a fixed order as (data, size). Running
// statistics are not trainable and are skipped.
template <class Model, class F>
void visit_parameters(Model& m, F&& f) {
  for (auto& blk : m.blocks) {
    f(blk.W.data(), static_cast<std::size_t>(blk.W.size()));
    f(blk.b.data(), static_cast<std::size_t>(blk.b.size()));
    f(blk.gamma.data(), static_cast<std::size_t>(blk.gamma.size()));
    f(blk.beta.data(), static_cast<std::size_t>(blk.beta.size()));
  }
  f(m.out_w.data(), static_cast<std::size_t>(m.out_w.size()));
  f(&m.out_b, std::size_t{1});
}

// He-uniform weights for the ReLU blocks, LeCun-uniform for the output unit.
inline MlpModel init_mlp(std::size_t input_dim, const MlpParams& params, Rng& rng) {
  MlpModel m;
  m.input_dim = input_dim;
  m.dropout = params.dropout;
  m.bn_eps = params.bn_eps;
  auto in = static_cast<Eigen::Index>(input_dim);
  for (auto width : params.hidden) {
    const auto out = static_cast<Eigen::Index>(width);
    DenseBlock blk;
    const double limit = std::sqrt(6.0 / static_cast<double>(std::max<Eigen::Index>(in, 1)));
    blk.W.resize(out, in);
    for (Eigen::Index c = 0; c < in; ++c)
      for (Eigen::Index r = 0; r < out; ++r) blk.W(r, c) = rng.uniform(-limit, limit);
    blk.b = Eigen::VectorXd::Zero(out);
    blk.gamma = Eigen::VectorXd::Ones(out);
    blk.beta = Eigen::VectorXd::Zero(out);
    blk.running_mean = Eigen::VectorXd::Zero(out);
    blk.running_var = Eigen::VectorXd::Ones(out);
    m.blocks.push_back(std::move(blk));
    in = out;
  }
  const double limit = std::sqrt(3.0 / static_cast<double>(std::max<Eigen::Index>(in, 1)));
  m.out_w.resize(in);
  for (Eigen::Index i = 0; i < in; ++i) m.out_w(i) = rng.uniform(-limit, limit);
  m.out_b = 0.0;
  return m;
}

// Inference: dropout off, running batch-norm statistics.
inline double predict_mlp(const MlpModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != m.input_dim)
    throw DimensionMismatch(m.input_dim, static_cast<std::size_t>(x.size()));
  Eigen::VectorXd h = x;
  for (const auto& blk : m.blocks) {
    Eigen::VectorXd a = (blk.W * h + blk.b).cwiseMax(0.0);
    h = ((a - blk.running_mean).array() / (blk.running_var.array() + m.bn_eps).sqrt() *
             blk.gamma.array() + blk.beta.array()).matrix();
  }
  return sigmoid(m.out_w.dot(h) + m.out_b);
}

// One prediction per row, each computed exactly as predict_mlp would.
inline Eigen::VectorXd predict_mlp_batch(const MlpModel& m, const Eigen::MatrixXd& X) {
  Eigen::VectorXd p(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) p(i) = predict_mlp(m, X.row(i).transpose());
  return p;
}

inline double bce_loss(const Eigen::VectorXd& p, std::span<const int> y) {
  constexpr double kFloor = 1e-15;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = std::clamp(p(i), kFloor, 1.0 - kFloor);
    loss -= y[static_cast<std::size_t>(i)] ? std::log(pi) : std::log(1.0 - pi);
  }
  return loss / static_cast<double>(p.size());
}

namespace detail {

struct BlockCache {
  Eigen::MatrixXd input;  // N x in
  Eigen::MatrixXd a;      // pre-activation
  Eigen::MatrixXd d;      // after ReLU and dropout
  Eigen::MatrixXd xhat;
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd var;
  Eigen::RowVectorXd invstd;
};

struct ForwardCache {
  std::vector<BlockCache> blocks;
  Eigen::MatrixXd last;  // N x last width
  Eigen::VectorXd logit;
  Eigen::VectorXd p;
};

// Training-mode forward pass on a batch: batch statistics, optional dropout
// masks (already scaled by 1/(1-rate)). Returns the mean cross-entropy with
// probabilities computed from logits directly.
inline double forward_train(const MlpModel& m, const Eigen::MatrixXd& X, std::span<const int> y,
                            const std::vector<Eigen::MatrixXd>* masks, ForwardCache& c) {
  const auto n = static_cast<double>(X.rows());
  c.blocks.resize(m.blocks.size());
  Eigen::MatrixXd h = X;
  for (std::size_t k = 0; k < m.blocks.size(); ++k) {
    const auto& blk = m.blocks[k];
    auto& bc = c.blocks[k];
    bc.input = std::move(h);
    bc.a = (bc.input * blk.W.transpose()).rowwise() + blk.b.transpose();
    bc.d = bc.a.cwiseMax(0.0);
    if (masks) bc.d = bc.d.cwiseProduct((*masks)[k]);
    bc.mean = bc.d.colwise().mean();
    const Eigen::MatrixXd centered = bc.d.rowwise() - bc.mean;
    bc.var = centered.array().square().colwise().sum() / n;
    bc.invstd = (bc.var.array() + m.bn_eps).rsqrt();
    bc.xhat = centered.array().rowwise() * bc.invstd.array();
    h = (bc.xhat.array().rowwise() * blk.gamma.transpose().array()).rowwise() +
        blk.beta.transpose().array();
  }
  c.last = std::move(h);
  c.logit = (c.last * m.out_w).array() + m.out_b;
  c.p.resize(c.logit.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < c.logit.size(); ++i) {
    const double z = c.logit(i);
    c.p(i) = sigmoid(z);
    loss += softplus(z) - y[static_cast<std::size_t>(i)] * z;
  }
  return loss / n;
}

// Gradient of forward_train's loss with respect to every trainable tensor,
// laid out in a model-shaped container.
inline MlpModel backward(const MlpModel& m, std::span<const int> y,
                         const std::vector<Eigen::MatrixXd>* masks, const ForwardCache& c) {
  const auto n = static_cast<double>(c.p.size());
  MlpModel g = m;
  Eigen::VectorXd dz(c.p.size());
  for (Eigen::Index i = 0; i < dz.size(); ++i) dz(i) = (c.p(i) - y[static_cast<std::size_t>(i)]) / n;
  g.out_w = c.last.transpose() * dz;
  g.out_b = dz.sum();
  Eigen::MatrixXd dh = dz * m.out_w.transpose();
  for (std::size_t k = m.blocks.size(); k-- > 0;) {
    const auto& blk = m.blocks[k];
    const auto& bc = c.blocks[k];
    auto& gb = g.blocks[k];
    gb.gamma = (dh.array() * bc.xhat.array()).colwise().sum().transpose();
    gb.beta = dh.colwise().sum().transpose();
    const Eigen::MatrixXd dxhat = dh.array().rowwise() * blk.gamma.transpose().array();
    const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
    const Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * bc.xhat.array()).colwise().sum();
    Eigen::MatrixXd dd = (n * dxhat.array()).matrix();
    dd.rowwise() -= sum_dxhat;
    dd -= (bc.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
    dd = (dd.array().rowwise() * (bc.invstd.array() / n)).matrix();
    if (masks) dd = dd.cwiseProduct((*masks)[k]);
    const Eigen::MatrixXd da = (bc.a.array() > 0.0).cast<double>() * dd.array();
    gb.W = da.transpose() * bc.input;
    gb.b = da.colwise().sum().transpose();
    if (k > 0) dh = da * blk.W;
  }
  return g;
}

}  // namespace detail

// Training-mode loss on a batch (batch statistics; masks may be null to
// disable dropout).
inline double mlp_batch_loss(const MlpModel& m, const Eigen::MatrixXd& X, std::span<const int> y,
                             const std::vector<Eigen::MatrixXd>* masks = nullptr) {
  detail::ForwardCache c;
  return detail::forward_train(m, X, y, masks, c);
}

// Backpropagated gradient of mlp_batch_loss, in a model-shaped container.
inline MlpModel mlp_batch_gradient(const MlpModel& m, const Eigen::MatrixXd& X,
                                   std::span<const int> y,
                                   const std::vector<Eigen::MatrixXd>* masks = nullptr,
                                   double* loss = nullptr) {
  detail::ForwardCache c;
  const double l = detail::forward_train(m, X, y, masks, c);
  if (loss) *loss = l;
  return detail::backward(m, y, masks, c);
}

namespace detail {

struct AdamState {
  std::vector<std::vector<double>> m1, m2;
  std::size_t t = 0;
};

inline void adam_step(MlpModel& model, MlpModel& grad, AdamState& s, const MlpParams& p) {
  std::vector<std::pair<double*, std::size_t>> params, grads;
  visit_parameters(model, [&](double* d, std::size_t n) { params.emplace_back(d, n); });
  visit_parameters(grad, [&](double* d, std::size_t n) { grads.emplace_back(d, n); });
  if (s.m1.empty()) {
    for (const auto& [d, n] : params) {
      s.m1.emplace_back(n, 0.0);
      s.m2.emplace_back(n, 0.0);
    }
  }
  ++s.t;
  const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(s.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto [w, n] = params[k];
    const double* gk = grads[k].first;
    auto& m1 = s.m1[k];
    auto& m2 = s.m2[k];
    for (std::size_t i = 0; i < n; ++i) {
      m1[i] = p.beta1 * m1[i] + (1.0 - p.beta1) * gk[i];
      m2[i] = p.beta2 * m2[i] + (1.0 - p.beta2) * gk[i] * gk[i];
      w[i] -= p.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + p.adam_eps);
    }
  }
}

inline Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace detail

// Minibatch Adam on mean binary cross-entropy. When validation_fraction > 0
// and both classes are present, a stratified validation fold drives early
// stopping and the best weights are restored. A trailing batch of one row is
// merged into the previous batch so batch statistics stay defined.
inline MlpModel train_mlp(const Eigen::MatrixXd& X, std::span<const int> y,
                          const MlpParams& params = {}, std::uint64_t seed = 0) {
  check_labels(y, X.rows());
  if (X.rows() == 0) throw EmptyPopulation();
  if (params.batch_size == 0) throw Error("batch size must be positive");
  Rng rng(seed);
  MlpModel model = init_mlp(static_cast<std::size_t>(X.cols()), params, rng);

  std::vector<std::size_t> train_rows(static_cast<std::size_t>(X.rows()));
  std::iota(train_rows.begin(), train_rows.end(), 0);
  std::vector<std::size_t> val_rows;
  if (params.validation_fraction > 0) {
    try {
      auto fold = stratified_holdout(y, params.validation_fraction, derive_seed(seed, "validation"));
      train_rows = std::move(fold.train);
      val_rows = std::move(fold.test);
    } catch (const SingleClass&) {
    } catch (const FoldTooSmall&) {
    }
  }
  Eigen::MatrixXd Xval;
  std::vector<int> yval;
  if (!val_rows.empty()) {
    Xval = detail::gather_rows(X, val_rows);
    for (auto r : val_rows) yval.push_back(y[r]);
  }

  detail::AdamState adam;
  detail::ForwardCache cache;
  std::optional<MlpModel> best;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t waited = 0;
  const double keep = 1.0 - params.dropout;

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(train_rows);
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t s = 0; s < train_rows.size(); s += params.batch_size)
      batches.emplace_back(s, std::min(train_rows.size(), s + params.batch_size));
    if (batches.size() > 1 && batches.back().second - batches.back().first == 1) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }
    double epoch_loss = 0.0;
    for (auto [lo, hi] : batches) {
      const std::span<const std::size_t> rows(train_rows.data() + lo, hi - lo);
      const Eigen::MatrixXd Xb = detail::gather_rows(X, rows);
      std::vector<int> yb;
      for (auto r : rows) yb.push_back(y[r]);

      std::vector<Eigen::MatrixXd> masks;
      if (params.dropout > 0) {
        for (const auto& blk : model.blocks) {
          Eigen::MatrixXd mk(Xb.rows(), blk.W.rows());
          for (Eigen::Index c = 0; c < mk.cols(); ++c)
            for (Eigen::Index r = 0; r < mk.rows(); ++r)
              mk(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;
          masks.push_back(std::move(mk));
        }
      }
      const auto* mp = params.dropout > 0 ? &masks : nullptr;
      const double loss = detail::forward_train(model, Xb, yb, mp, cache);
      if (!std::isfinite(loss)) throw NonFiniteLoss("neural network");
      MlpModel grad = detail::backward(model, yb, mp, cache);
      for (std::size_t k = 0; k < model.blocks.size(); ++k) {
        auto& blk = model.blocks[k];
        const auto& bc = cache.blocks[k];
        blk.running_mean = params.bn_momentum * blk.running_mean + (1.0 - params.bn_momentum) * bc.mean.transpose();
        blk.running_var = params.bn_momentum * blk.running_var + (1.0 - params.bn_momentum) * bc.var.transpose();
      }
      detail::adam_step(model, grad, adam, params);
      epoch_loss += loss * static_cast<double>(hi - lo);
    }
    model.train_loss.push_back(epoch_loss / static_cast<double>(train_rows.size()));

    if (!val_rows.empty()) {
      const double v = bce_loss(predict_mlp_batch(model, Xval), yval);
      if (!std::isfinite(v)) throw NonFiniteLoss("neural network validation");
      model.val_loss.push_back(v);
      if (v < best_val) {
        best_val = v;
        waited = 0;
        model.best_epoch = epoch;
        best = model;
      } else if (++waited >= params.patience) {
        break;
      }
    } else {
      model.best_epoch = epoch;
    }
  }
  if (best) {
    auto train_loss = std::move(model.train_loss);
    auto val_loss = std::move(model.val_loss);
    model = std::move(*best);
    model.train_loss = std::move(train_loss);
    model.val_loss = std::move(val_loss);
  }
  return model;
}

}  // namespace mfel::ml
