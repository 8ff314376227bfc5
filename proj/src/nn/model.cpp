// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model.cpp
 * @brief  BLSTM stack and classification head.
 */

#include <har/nn/model.hpp>

#include <cmath>

namespace har::nn {

void ModelConfig::validate() const {
  if (input_dim <= 0) throw ParameterError("input_dim must be positive");
  if (blstm_layers < 1) throw ParameterError("blstm_layers must be >= 1");
  if (hidden < 1) throw ParameterError("hidden must be >= 1");
  if (dense_hidden < 1) throw ParameterError("dense_hidden must be >= 1");
  if (n_classes < 2) throw ParameterError("n_classes must be >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
  if (!(l2 >= 0.0)) throw ParameterError("l2 must be >= 0");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0))
    throw ParameterError("bn_momentum must lie in [0, 1)");
  if (!(bn_epsilon > 0.0)) throw ParameterError("bn_epsilon must be positive");
  if (gi_k < 1) throw ParameterError("gi_k must be >= 1");
}

template <typename T>
Model<T>::Model(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(init_seed);
  int in = cfg_.input_dim;
  for (int l = 0; l < cfg_.blstm_layers; ++l) {
    const std::string p = "blstm" + std::to_string(l);
    blstm_.emplace_back(p, in, cfg_.hidden);
    blstm_.back().init(rng);
    bn_.emplace_back("bn" + std::to_string(l), 2 * cfg_.hidden, cfg_.bn_momentum,
                     cfg_.bn_epsilon);
    drop_.emplace_back(cfg_.dropout);
    in = 2 * cfg_.hidden;
  }
  dense1_ = DenseLayer<T>("dense0", in, cfg_.dense_hidden);
  dense1_.init(rng);
  prelu_ = PReluLayer<T>("prelu0", cfg_.dense_hidden);
  dense2_ = DenseLayer<T>("dense1", cfg_.dense_hidden, cfg_.n_classes);
  dense2_.init(rng);
  input_mean_ = Mat<T>::Zero(1, cfg_.input_dim);
  input_scale_ = Mat<T>::Ones(1, cfg_.input_dim);
}

template <typename T>
ColVec<T> Model<T>::row_mask(const Batch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.max_len * batch.batch);
  ColVec<T> m(n);
  for (std::size_t t = 0; t < batch.max_len; ++t)
    for (std::size_t b = 0; b < batch.batch; ++b)
      m(static_cast<Eigen::Index>(t * batch.batch + b)) = batch.valid(b, t) ? T(1) : T(0);
  return m;
}

template <typename T>
Mat<T> Model<T>::input_matrix(const Batch& batch) const {
  if (static_cast<int>(kPoseDim) != cfg_.input_dim)
    throw ShapeError("model input_dim does not match pose vector length");
  const auto n = static_cast<Eigen::Index>(batch.max_len * batch.batch);
  Mat<T> x = Mat<T>::Zero(n, cfg_.input_dim);
  for (std::size_t t = 0; t < batch.max_len; ++t)
    for (std::size_t b = 0; b < batch.batch; ++b) {
      if (!batch.valid(b, t)) continue;
      const auto r = static_cast<Eigen::Index>(t * batch.batch + b);
      for (std::size_t j = 0; j < kPoseDim; ++j) {
        if (!batch.entry_valid(b, t, j)) continue;
        const auto c = static_cast<Eigen::Index>(j);
        x(r, c) = (static_cast<T>(batch.value(b, t, j)) - input_mean_(0, c)) *
                  input_scale_(0, c);
      }
    }
  return x;
}

template <typename T>
Mat<T> Model<T>::forward_stack(const Batch& batch, Mode mode, std::mt19937_64& rng) {
  steps_ = batch.max_len;
  batch_ = batch.batch;
  mask_ = row_mask(batch);
  Mat<T> h = input_matrix(batch);
  for (std::size_t l = 0; l < blstm_.size(); ++l) {
    h = blstm_[l].forward(h, mask_, steps_, batch_);
    h = bn_[l].forward(h, mask_, mode);
    h = drop_[l].forward(h, mode, rng);
  }
  return h;
}

template <typename T>
void Model<T>::backward_stack(const Mat<T>& d_top) {
  Mat<T> d = d_top;
  for (std::size_t l = blstm_.size(); l-- > 0;) {
    d = drop_[l].backward(d);
    d = bn_[l].backward(d);
    d = blstm_[l].backward(d, l > 0);
  }
}

template <typename T>
Mat<T> Model<T>::head_forward(const Mat<T>& features) {
  return dense2_.forward(prelu_.forward(dense1_.forward(features)));
}

template <typename T>
Mat<T> Model<T>::head_backward(const Mat<T>& d_logits) {
  return dense1_.backward(prelu_.backward(dense2_.backward(d_logits)));
}

template <typename T>
std::vector<Param<T>*> Model<T>::params() {
  std::vector<Param<T>*> out;
  for (std::size_t l = 0; l < blstm_.size(); ++l) {
    for (auto* p : blstm_[l].params()) out.push_back(p);
    for (auto* p : bn_[l].params()) out.push_back(p);
  }
  for (auto* p : dense1_.params()) out.push_back(p);
  for (auto* p : prelu_.params()) out.push_back(p);
  for (auto* p : dense2_.params()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<Buffer<T>> Model<T>::buffers() {
  std::vector<Buffer<T>> out{{"input.mean", &input_mean_}, {"input.scale", &input_scale_}};
  for (auto& bn : bn_)
    for (auto& b : bn.buffers()) out.push_back(b);
  return out;
}

template <typename T>
std::size_t Model<T>::parameter_count() {
  std::size_t n = 0;
  for (auto* p : params()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

template <typename T>
double Model<T>::l2_penalty() {
  double s = 0.0;
  for (auto* p : params())
    if (p->decay) s += static_cast<double>(p->value.squaredNorm());
  return cfg_.l2 * s;
}

template <typename T>
void Model<T>::add_l2_grad() {
  if (cfg_.l2 == 0.0) return;
  const T k = static_cast<T>(2.0 * cfg_.l2);
  for (auto* p : params())
    if (p->decay) p->grad += k * p->value;
}

template <typename T>
void Model<T>::set_input_normalization(const RowVec<T>& mean, const RowVec<T>& scale) {
  if (mean.size() != cfg_.input_dim || scale.size() != cfg_.input_dim)
    throw ShapeError("input normalization must have input_dim entries");
  input_mean_ = mean;
  input_scale_ = scale;
}

template <typename T>
void Model<T>::set_bn_running_update(bool enabled) {
  for (auto& bn : bn_) bn.update_running = enabled;
}

void fit_input_normalization(std::span<const PoseSequence> seqs,
                             std::vector<double>& mean, std::vector<double>& scale) {
  std::vector<double> sum(kPoseDim, 0.0), sq(kPoseDim, 0.0), cnt(kPoseDim, 0.0);
  for (const auto& s : seqs)
    for (const auto& f : s.frames)
      for (std::size_t j = 0; j < kPoseDim; ++j) {
        if (!f.mask[j]) continue;
        sum[j] += f.values[j];
        cnt[j] += 1.0;
      }
  mean.assign(kPoseDim, 0.0);
  for (std::size_t j = 0; j < kPoseDim; ++j)
    if (cnt[j] > 0) mean[j] = sum[j] / cnt[j];
  for (const auto& s : seqs)
    for (const auto& f : s.frames)
      for (std::size_t j = 0; j < kPoseDim; ++j) {
        if (!f.mask[j]) continue;
        const double d = f.values[j] - mean[j];
        sq[j] += d * d;
      }
  scale.assign(kPoseDim, 1.0);
  for (std::size_t j = 0; j < kPoseDim; ++j) {
    if (cnt[j] == 0) continue;
    const double sd = std::sqrt(sq[j] / cnt[j]);
    if (sd > 1e-12) scale[j] = 1.0 / sd;
  }
}

template class Model<float>;
template class Model<double>;

}  // namespace har::nn
