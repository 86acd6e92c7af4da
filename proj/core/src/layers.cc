#include "qasl/layers.h"

#include <cmath>

namespace qasl::nn {

Matrix LinearForward(const ParameterStore& ps, const LinearRef& ref, const Matrix& x) {
  Matrix y = x * ps.value(ref.weight);
  y.rowwise() += ps.value(ref.bias).row(0);
  return y;
}

void LinearBackwardParamsOnly(const LinearRef& ref, const Matrix& x, const Matrix& dy,
                              const GradSink& sink) {
  if (sink.Wants(ref.weight)) (*sink.grads)[ref.weight].noalias() += x.transpose() * dy;
  if (sink.Wants(ref.bias)) (*sink.grads)[ref.bias] += dy.colwise().sum();
}

Matrix LinearBackward(const ParameterStore& ps, const LinearRef& ref, const Matrix& x,
                      const Matrix& dy, const GradSink& sink) {
  LinearBackwardParamsOnly(ref, x, dy, sink);
  return dy * ps.value(ref.weight).transpose();
}

Matrix LayerNormForward(const ParameterStore& ps, const LayerNormRef& ref, const Matrix& x,
                        LayerNormCache* cache) {
  const Eigen::Index n = x.cols();
  Eigen::VectorXd mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  Eigen::VectorXd var = centered.rowwise().squaredNorm() / static_cast<double>(n);
  Eigen::VectorXd inv_std = (var.array() + kLayerNormEps).rsqrt().matrix();
  Matrix normalized = inv_std.asDiagonal() * centered;
  Matrix y = normalized.array().rowwise() * ps.value(ref.gamma).row(0).array();
  y.rowwise() += ps.value(ref.beta).row(0);
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix LayerNormBackward(const ParameterStore& ps, const LayerNormRef& ref,
                         const LayerNormCache& cache, const Matrix& dy, const GradSink& sink) {
  const auto& xhat = cache.normalized;
  if (sink.Wants(ref.gamma)) {
    (*sink.grads)[ref.gamma] += (dy.array() * xhat.array()).colwise().sum().matrix();
  }
  if (sink.Wants(ref.beta)) (*sink.grads)[ref.beta] += dy.colwise().sum();
  const double n = static_cast<double>(dy.cols());
  Matrix dxhat = dy.array().rowwise() * ps.value(ref.gamma).row(0).array();
  Eigen::VectorXd mean_d = dxhat.rowwise().sum() / n;
  Eigen::VectorXd mean_dx = (dxhat.array() * xhat.array()).rowwise().sum().matrix() / n;
  Matrix dx = dxhat.colwise() - mean_d;
  dx -= (xhat.array().colwise() * mean_dx.array()).matrix();
  return cache.inv_std.asDiagonal() * dx;
}

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

}  // namespace

Matrix Activate(Nonlinearity fn, const Matrix& pre) {
  switch (fn) {
    case Nonlinearity::kRelu:
      return pre.cwiseMax(0.0);
    case Nonlinearity::kTanh:
      return pre.array().tanh().matrix();
    case Nonlinearity::kGelu: {
      auto x = pre.array();
      return (0.5 * x * (1.0 + (kGeluC * (x + 0.044715 * x.cube())).tanh())).matrix();
    }
  }
  return pre;
}

Matrix ActivateBackward(Nonlinearity fn, const Matrix& pre, const Matrix& dy) {
  switch (fn) {
    case Nonlinearity::kRelu:
      return (pre.array() > 0.0).select(dy, 0.0);
    case Nonlinearity::kTanh: {
      auto t = pre.array().tanh();
      return (dy.array() * (1.0 - t.square())).matrix();
    }
    case Nonlinearity::kGelu: {
      auto x = pre.array();
      auto inner = kGeluC * (x + 0.044715 * x.cube());
      auto t = inner.tanh();
      auto d_inner = kGeluC * (1.0 + 3.0 * 0.044715 * x.square());
      auto grad = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t.square()) * d_inner;
      return (dy.array() * grad).matrix();
    }
  }
  return dy;
}

Matrix AttentionForward(const ParameterStore& ps, const AttentionRef& ref, const Matrix& x,
                        AttentionCache* cache) {
  Matrix q = LinearForward(ps, ref.query, x);
  Matrix k = LinearForward(ps, ref.key, x);
  Matrix v = LinearForward(ps, ref.value, x);
  const Eigen::Index len = x.rows();
  const Eigen::Index dim = q.cols();
  const Eigen::Index head_dim = dim / ref.num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Matrix merged(len, dim);
  std::vector<Matrix> probs;
  probs.reserve(ref.num_heads);
  for (int h = 0; h < ref.num_heads; ++h) {
    const Eigen::Index off = h * head_dim;
    Matrix scores = (q.middleCols(off, head_dim) * k.middleCols(off, head_dim).transpose()) * scale;
    Eigen::VectorXd row_max = scores.rowwise().maxCoeff();
    scores = (scores.colwise() - row_max).array().exp().matrix();
    Eigen::VectorXd row_sum = scores.rowwise().sum();
    scores = row_sum.cwiseInverse().asDiagonal() * scores;
    merged.middleCols(off, head_dim).noalias() = scores * v.middleCols(off, head_dim);
    probs.push_back(std::move(scores));
  }
  Matrix out = LinearForward(ps, ref.output, merged);
  if (cache != nullptr) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->merged = std::move(merged);
  }
  return out;
}

Matrix AttentionBackward(const ParameterStore& ps, const AttentionRef& ref,
                         const AttentionCache& cache, const Matrix& dy, const GradSink& sink) {
  const Matrix d_merged = LinearBackward(ps, ref.output, cache.merged, dy, sink);
  const Eigen::Index len = cache.q.rows();
  const Eigen::Index dim = cache.q.cols();
  const Eigen::Index head_dim = dim / ref.num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Matrix dq(len, dim), dk(len, dim), dv(len, dim);
  for (int h = 0; h < ref.num_heads; ++h) {
    const Eigen::Index off = h * head_dim;
    const Matrix& p = cache.probs[h];
    const auto d_out = d_merged.middleCols(off, head_dim);
    dv.middleCols(off, head_dim).noalias() = p.transpose() * d_out;
    Matrix dp = d_out * cache.v.middleCols(off, head_dim).transpose();
    Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
    Matrix ds = (p.array() * (dp.colwise() - row_dot).array()).matrix() * scale;
    dq.middleCols(off, head_dim).noalias() = ds * cache.k.middleCols(off, head_dim);
    dk.middleCols(off, head_dim).noalias() = ds.transpose() * cache.q.middleCols(off, head_dim);
  }
  Matrix dx = LinearBackward(ps, ref.query, cache.input, dq, sink);
  dx += LinearBackward(ps, ref.key, cache.input, dk, sink);
  dx += LinearBackward(ps, ref.value, cache.input, dv, sink);
  return dx;
}

}  // namespace qasl::nn
