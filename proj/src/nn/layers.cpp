// SPDX-License-Identifier: Apache-2.0
/**
 * @file   layers.cpp
 * @brief  Forward and backward passes of the recurrent and feed-forward layers.
 */

#include <har/nn/layers.hpp>

#include <cmath>

namespace har::nn {

namespace {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& z) {
  using S = typename Derived::Scalar;
  return (S(1) + (-z).exp()).inverse();
}

template <typename T>
void fill_uniform(Mat<T>& m, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-limit, limit);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(u(rng));
}

template <typename T>
RowVec<T> masked_colsum(const Mat<T>& m, const ColVec<T>& mask) {
  return (m.transpose() * mask).transpose();
}

}  // namespace

// ---------------------------------------------------------------------------

template <typename T>
LstmState<T> lstm_step(const Mat<T>& x, const Mat<T>& h_prev, const Mat<T>& c_prev,
                       const Mat<T>& wx, const Mat<T>& wh, const Mat<T>& bias) {
  const Eigen::Index hid = wh.rows();
  if (x.cols() != wx.rows() || wx.cols() != 4 * hid || wh.cols() != 4 * hid ||
      bias.cols() != 4 * hid || h_prev.cols() != hid || c_prev.cols() != hid ||
      h_prev.rows() != x.rows() || c_prev.rows() != x.rows())
    throw ShapeError("lstm_step: inconsistent dimensions");
  Mat<T> z = x * wx + h_prev * wh;
  z.rowwise() += bias.row(0);
  const auto i = sigmoid(z.leftCols(hid).array()).eval();
  const auto f = sigmoid(z.middleCols(hid, hid).array()).eval();
  const auto g = z.middleCols(2 * hid, hid).array().tanh().eval();
  const auto o = sigmoid(z.rightCols(hid).array()).eval();
  LstmState<T> out;
  out.c = (f * c_prev.array() + i * g).matrix();
  out.h = (o * out.c.array().tanh()).matrix();
  check_finite(out.h, "lstm_step output");
  check_finite(out.c, "lstm_step cell state");
  return out;
}

template <typename T>
LstmDirection<T>::LstmDirection(const std::string& prefix, int input_dim, int hidden)
    : wx(prefix + ".wx", input_dim, 4 * hidden, true),
      wh(prefix + ".wh", hidden, 4 * hidden, true),
      b(prefix + ".b", 1, 4 * hidden, false),
      input_dim_(input_dim),
      hidden_(hidden) {
  if (input_dim <= 0 || hidden <= 0) throw ShapeError("LSTM dimensions must be positive");
}

template <typename T>
void LstmDirection<T>::init(std::mt19937_64& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(hidden_));
  fill_uniform(wx.value, limit, rng);
  fill_uniform(wh.value, limit, rng);
  b.value.setZero();
  b.value.middleCols(hidden_, hidden_).setOnes();  // forget gate starts open
}

template <typename T>
Mat<T> LstmDirection<T>::forward(const Mat<T>& x, const ColVec<T>& mask,
                                 std::size_t steps, std::size_t batch, bool reverse) {
  const auto n = static_cast<Eigen::Index>(steps * batch);
  if (x.rows() != n || mask.size() != n || x.cols() != input_dim_)
    throw ShapeError("LSTM forward: input is " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + ", expected " + std::to_string(n) +
                     "x" + std::to_string(input_dim_));
  steps_ = steps;
  batch_ = batch;
  reverse_ = reverse;
  x_ = x;
  mask_ = mask;

  const Eigen::Index hid = hidden_;
  const auto bs = static_cast<Eigen::Index>(batch);
  Mat<T> z_all = x * wx.value;
  z_all.rowwise() += b.value.row(0);

  gates_.resize(n, 4 * hid);
  h_prev_.resize(n, hid);
  c_prev_.resize(n, hid);
  tanh_c_.resize(n, hid);
  Mat<T> out = Mat<T>::Zero(n, hid);

  Mat<T> h = Mat<T>::Zero(bs, hid);
  Mat<T> c = Mat<T>::Zero(bs, hid);
  Mat<T> z(bs, 4 * hid);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    const auto r0 = static_cast<Eigen::Index>(t * batch);
    const auto m = mask_.segment(r0, bs).array();

    z = z_all.middleRows(r0, bs);
    z.noalias() += h * wh.value;
    h_prev_.middleRows(r0, bs) = h;
    c_prev_.middleRows(r0, bs) = c;

    auto G = gates_.middleRows(r0, bs);
    G.leftCols(hid) = sigmoid(z.leftCols(hid).array()).matrix();
    G.middleCols(hid, hid) = sigmoid(z.middleCols(hid, hid).array()).matrix();
    G.middleCols(2 * hid, hid) = z.middleCols(2 * hid, hid).array().tanh().matrix();
    G.rightCols(hid) = sigmoid(z.rightCols(hid).array()).matrix();

    const Mat<T> c_new = (G.middleCols(hid, hid).array() * c.array() +
                          G.leftCols(hid).array() * G.middleCols(2 * hid, hid).array())
                             .matrix();
    auto tc = tanh_c_.middleRows(r0, bs);
    tc = c_new.array().tanh().matrix();
    const Mat<T> h_new = (G.rightCols(hid).array() * tc.array()).matrix();

    out.middleRows(r0, bs) = (h_new.array().colwise() * m).matrix();
    h.array() += (h_new - h).array().colwise() * m;
    c.array() += (c_new - c).array().colwise() * m;
  }
  check_finite(out, wx.name + " forward");
  return out;
}

template <typename T>
Mat<T> LstmDirection<T>::backward(const Mat<T>& dy, bool need_dx) {
  const Eigen::Index hid = hidden_;
  const auto bs = static_cast<Eigen::Index>(batch_);
  const auto n = static_cast<Eigen::Index>(steps_ * batch_);
  if (dy.rows() != n || dy.cols() != hid) throw ShapeError("LSTM backward: bad dy shape");

  Mat<T> dz(n, 4 * hid);
  Mat<T> dh = Mat<T>::Zero(bs, hid);
  Mat<T> dc = Mat<T>::Zero(bs, hid);
  for (std::size_t s = steps_; s-- > 0;) {
    const std::size_t t = reverse_ ? steps_ - 1 - s : s;
    const auto r0 = static_cast<Eigen::Index>(t * batch_);
    const auto m = mask_.segment(r0, bs).array();
    const auto G = gates_.middleRows(r0, bs);
    const auto i = G.leftCols(hid).array();
    const auto f = G.middleCols(hid, hid).array();
    const auto g = G.middleCols(2 * hid, hid).array();
    const auto o = G.rightCols(hid).array();
    const auto tc = tanh_c_.middleRows(r0, bs).array();

    const Mat<T> dh_new =
        ((dy.middleRows(r0, bs) + dh).array().colwise() * m).matrix();
    const Mat<T> dc_new =
        ((dc.array().colwise() * m) + dh_new.array() * o * (T(1) - tc * tc)).matrix();

    auto D = dz.middleRows(r0, bs);
    D.leftCols(hid) = (dc_new.array() * g * i * (T(1) - i)).matrix();
    D.middleCols(hid, hid) =
        (dc_new.array() * c_prev_.middleRows(r0, bs).array() * f * (T(1) - f)).matrix();
    D.middleCols(2 * hid, hid) = (dc_new.array() * i * (T(1) - g * g)).matrix();
    D.rightCols(hid) = (dh_new.array() * tc * o * (T(1) - o)).matrix();

    dc = ((dc.array().colwise() * (T(1) - m)) + dc_new.array() * f).matrix();
    dh = (dh.array().colwise() * (T(1) - m)).matrix();
    dh.noalias() += D * wh.value.transpose();
  }
  wx.grad.noalias() += x_.transpose() * dz;
  wh.grad.noalias() += h_prev_.transpose() * dz;
  b.grad += dz.colwise().sum();
  check_finite(dz, wx.name + " backward");
  if (!need_dx) return {};
  return dz * wx.value.transpose();
}

template <typename T>
BlstmLayer<T>::BlstmLayer(const std::string& prefix, int input_dim, int hidden)
    : fwd(prefix + ".fwd", input_dim, hidden), bwd(prefix + ".bwd", input_dim, hidden) {}

template <typename T>
void BlstmLayer<T>::init(std::mt19937_64& rng) {
  fwd.init(rng);
  bwd.init(rng);
}

template <typename T>
Mat<T> BlstmLayer<T>::forward(const Mat<T>& x, const ColVec<T>& mask,
                              std::size_t steps, std::size_t batch) {
  const Eigen::Index hid = fwd.hidden();
  Mat<T> out(x.rows(), 2 * hid);
  out.leftCols(hid) = fwd.forward(x, mask, steps, batch, false);
  out.rightCols(hid) = bwd.forward(x, mask, steps, batch, true);
  return out;
}

template <typename T>
Mat<T> BlstmLayer<T>::backward(const Mat<T>& dy, bool need_dx) {
  const Eigen::Index hid = fwd.hidden();
  if (dy.cols() != 2 * hid) throw ShapeError("BLSTM backward: bad dy width");
  Mat<T> dx = fwd.backward(dy.leftCols(hid), need_dx);
  Mat<T> dxb = bwd.backward(dy.rightCols(hid), need_dx);
  if (need_dx) dx += dxb;
  return dx;
}

template <typename T>
std::vector<Param<T>*> BlstmLayer<T>::params() {
  auto p = fwd.params();
  for (auto* q : bwd.params()) p.push_back(q);
  return p;
}

// ---------------------------------------------------------------------------

template <typename T>
BatchNormLayer<T>::BatchNormLayer(const std::string& prefix, int features,
                                  double momentum, double epsilon)
    : gamma(prefix + ".gamma", 1, features, false),
      beta(prefix + ".beta", 1, features, false),
      running_mean(Mat<T>::Zero(1, features)),
      running_var(Mat<T>::Ones(1, features)),
      momentum_(momentum),
      epsilon_(epsilon) {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("BN momentum must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ParameterError("BN epsilon must be positive");
  gamma.value.setOnes();
}

template <typename T>
std::vector<Buffer<T>> BatchNormLayer<T>::buffers() {
  const std::string prefix = gamma.name.substr(0, gamma.name.rfind('.'));
  return {{prefix + ".running_mean", &running_mean}, {prefix + ".running_var", &running_var}};
}

template <typename T>
Mat<T> BatchNormLayer<T>::forward(const Mat<T>& x, const ColVec<T>& mask, Mode mode) {
  if (x.cols() != gamma.value.cols() || mask.size() != x.rows())
    throw ShapeError("batchnorm: input width does not match feature count");
  mode_ = mode;
  mask_ = mask;
  const T eps = static_cast<T>(epsilon_);
  if (mode == Mode::kTrain) {
    count_ = mask.sum();
    if (!(count_ > T(0)))
      throw ParameterError("batchnorm: no valid positions in training batch");
    const RowVec<T> mean = masked_colsum<T>(x, mask) / count_;
    Mat<T> centered = x.rowwise() - mean;
    const RowVec<T> var = masked_colsum<T>(centered.cwiseAbs2(), mask) / count_;
    inv_std_ = (var.array() + eps).rsqrt().matrix();
    xhat_ = row_scaled<T>((centered.array().rowwise() * inv_std_.array()).matrix(), mask);
    if (update_running) {
      const T mom = static_cast<T>(momentum_);
      running_mean = mom * running_mean + (T(1) - mom) * mean;
      running_var = mom * running_var + (T(1) - mom) * var;
    }
  } else {
    inv_std_ = (running_var.array() + eps).rsqrt().matrix();
    xhat_ = row_scaled<T>(
        ((x.rowwise() - running_mean.row(0)).array().rowwise() * inv_std_.array()).matrix(),
        mask);
  }
  Mat<T> y = (xhat_.array().rowwise() * gamma.value.row(0).array()).matrix();
  y.rowwise() += beta.value.row(0);
  y = row_scaled<T>(y, mask);
  check_finite(y, gamma.name + " forward");
  return y;
}

template <typename T>
Mat<T> BatchNormLayer<T>::backward(const Mat<T>& dy) {
  const Mat<T> dym = row_scaled<T>(dy, mask_);
  beta.grad += dym.colwise().sum();
  gamma.grad += dym.cwiseProduct(xhat_).colwise().sum();
  const Mat<T> dxhat = (dym.array().rowwise() * gamma.value.row(0).array()).matrix();
  if (mode_ == Mode::kInfer)
    return (dxhat.array().rowwise() * inv_std_.array()).matrix();
  const RowVec<T> sum_d = dxhat.colwise().sum();
  const RowVec<T> sum_dx = dxhat.cwiseProduct(xhat_).colwise().sum();
  Mat<T> dx = count_ * dxhat;
  dx.rowwise() -= sum_d;
  dx -= (xhat_.array().rowwise() * sum_dx.array()).matrix();
  dx = (dx.array().rowwise() * (inv_std_.array() / count_)).matrix();
  return row_scaled<T>(dx, mask_);
}

// ---------------------------------------------------------------------------

template <typename T>
DropoutLayer<T>::DropoutLayer(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1)");
}

template <typename T>
Mat<T> DropoutLayer<T>::forward(const Mat<T>& x, Mode mode, std::mt19937_64& rng) {
  active_ = mode == Mode::kTrain && rate_ > 0.0;
  if (!active_) return x;
  keep_.resize(x.rows(), x.cols());
  const T scale = static_cast<T>(1.0 / (1.0 - rate_));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < keep_.size(); ++i)
    keep_.data()[i] = u(rng) < rate_ ? T(0) : scale;
  return x.cwiseProduct(keep_);
}

template <typename T>
Mat<T> DropoutLayer<T>::backward(const Mat<T>& dy) const {
  if (!active_) return dy;
  return dy.cwiseProduct(keep_);
}

// ---------------------------------------------------------------------------

template <typename T>
DenseLayer<T>::DenseLayer(const std::string& prefix, int input_dim, int output_dim)
    : w(prefix + ".w", input_dim, output_dim, true), b(prefix + ".b", 1, output_dim, false) {
  if (input_dim <= 0 || output_dim <= 0) throw ShapeError("dense dimensions must be positive");
}

template <typename T>
void DenseLayer<T>::init(std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.value.rows() + w.value.cols()));
  fill_uniform(w.value, limit, rng);
  b.value.setZero();
}

template <typename T>
Mat<T> DenseLayer<T>::forward(const Mat<T>& x) {
  if (x.cols() != w.value.rows())
    throw ShapeError("dense: input width " + std::to_string(x.cols()) + " != " +
                     std::to_string(w.value.rows()));
  input_ = x;
  Mat<T> y = x * w.value;
  y.rowwise() += b.value.row(0);
  check_finite(y, w.name + " forward");
  return y;
}

template <typename T>
Mat<T> DenseLayer<T>::backward(const Mat<T>& dy) {
  if (dy.cols() != w.value.cols() || dy.rows() != input_.rows())
    throw ShapeError("dense backward: bad dy shape");
  w.grad.noalias() += input_.transpose() * dy;
  b.grad += dy.colwise().sum();
  return dy * w.value.transpose();
}

template <typename T>
PReluLayer<T>::PReluLayer(const std::string& prefix, int features, double initial_slope)
    : slope(prefix + ".slope", 1, features, false) {
  slope.value.setConstant(static_cast<T>(initial_slope));
}

template <typename T>
Mat<T> PReluLayer<T>::forward(const Mat<T>& x) {
  if (x.cols() != slope.value.cols()) throw ShapeError("prelu: width mismatch");
  input_ = x;
  const auto a = slope.value.row(0).array();
  return (x.array() > T(0))
      .select(x.array(), x.array().rowwise() * a)
      .matrix();
}

template <typename T>
Mat<T> PReluLayer<T>::backward(const Mat<T>& dy) {
  const auto pos = (input_.array() > T(0));
  slope.grad += pos.select(T(0), dy.array() * input_.array()).matrix().colwise().sum();
  const auto a = slope.value.row(0).array();
  return pos.select(dy.array(), dy.array().rowwise() * a).matrix();
}

// ---------------------------------------------------------------------------

template <typename T>
Mat<T> softmax_rows(const Mat<T>& logits) {
  Mat<T> p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  const ColVec<T> sums = p.rowwise().sum();
  return (p.array().colwise() / sums.array()).matrix();
}

template <typename T>
SoftmaxCrossEntropy<T> softmax_cross_entropy(const Mat<T>& logits,
                                             const std::vector<int>& labels) {
  const Eigen::Index n = logits.rows(), c = logits.cols();
  if (static_cast<std::size_t>(n) != labels.size())
    throw ShapeError("softmax_cross_entropy: label count does not match rows");
  if (n == 0) throw ShapeError("softmax_cross_entropy: empty batch");
  SoftmaxCrossEntropy<T> out;
  const ColVec<T> mx = logits.rowwise().maxCoeff();
  const Mat<T> shifted = logits.colwise() - mx;
  const ColVec<T> log_z = shifted.array().exp().rowwise().sum().log().matrix();
  out.probs = (shifted.colwise() - log_z).array().exp().matrix();
  out.dlogits = out.probs / static_cast<T>(n);
  double total = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= c)
      throw ParameterError("label " + std::to_string(y) + " outside [0, " +
                           std::to_string(c) + ")");
    total -= static_cast<double>(shifted(r, y) - log_z(r));
    out.dlogits(r, y) -= T(1) / static_cast<T>(n);
  }
  out.loss = total / static_cast<double>(n);
  if (!std::isfinite(out.loss)) throw NumericalFault("non-finite cross-entropy");
  return out;
}

#define HAR_INSTANTIATE(T)                                                          \
  template LstmState<T> lstm_step<T>(const Mat<T>&, const Mat<T>&, const Mat<T>&,   \
                                     const Mat<T>&, const Mat<T>&, const Mat<T>&);  \
  template class LstmDirection<T>;                                                  \
  template class BlstmLayer<T>;                                                     \
  template class BatchNormLayer<T>;                                                 \
  template class DropoutLayer<T>;                                                   \
  template class DenseLayer<T>;                                                     \
  template class PReluLayer<T>;                                                     \
  template Mat<T> softmax_rows<T>(const Mat<T>&);                                   \
  template SoftmaxCrossEntropy<T> softmax_cross_entropy<T>(const Mat<T>&,           \
                                                           const std::vector<int>&);
HAR_INSTANTIATE(float)
HAR_INSTANTIATE(double)
#undef HAR_INSTANTIATE

}  // namespace har::nn
