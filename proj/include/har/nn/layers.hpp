// SPDX-License-Identifier: Apache-2.0
/**
 * @file   layers.hpp
 * @brief  Differentiable layers: LSTM / BLSTM, batch normalization, dropout,
 *         dense, PReLU and softmax cross-entropy.
 *
 * Every layer caches what its backward pass needs during forward(); call
 * backward() at most once per forward(). Parameter gradients accumulate into
 * Param::grad.
 */
#pragma once

#include <har/nn/tensor.hpp>

#include <random>
#include <string>
#include <vector>

namespace har::nn {

// ---------------------------------------------------------------------------
// LSTM

/// Gate blocks along the 4H axis, in this order.
enum LstmGate { kGateInput = 0, kGateForget = 1, kGateCell = 2, kGateOutput = 3 };

template <typename T>
struct LstmState {
  Mat<T> h;
  Mat<T> c;
};

/// One cell update for a batch: z = x Wx + h Wh + b, i/f/o = sigmoid, g = tanh,
/// c' = f * c + i * g, h' = o * tanh(c'). x is B x D, h and c are B x H.
template <typename T>
LstmState<T> lstm_step(const Mat<T>& x, const Mat<T>& h_prev, const Mat<T>& c_prev,
                       const Mat<T>& wx, const Mat<T>& wh, const Mat<T>& bias);

/// A single-direction LSTM scanning a masked, time-major sequence.
template <typename T>
class LstmDirection {
 public:
  LstmDirection() = default;
  LstmDirection(const std::string& prefix, int input_dim, int hidden);

  void init(std::mt19937_64& rng);

  /// x: (steps*batch) x D. Rows with mask 0 leave the state untouched and
  /// produce zero output. reverse scans t = steps-1 .. 0.
  Mat<T> forward(const Mat<T>& x, const ColVec<T>& mask, std::size_t steps,
                 std::size_t batch, bool reverse);

  /// dy: gradient w.r.t. the output. Returns dL/dx when need_dx.
  Mat<T> backward(const Mat<T>& dy, bool need_dx);

  std::vector<Param<T>*> params() { return {&wx, &wh, &b}; }
  int hidden() const { return hidden_; }

  Param<T> wx, wh, b;

 private:
  int input_dim_ = 0;
  int hidden_ = 0;
  std::size_t steps_ = 0, batch_ = 0;
  bool reverse_ = false;
  Mat<T> x_;
  ColVec<T> mask_;
  Mat<T> gates_;   // activated i, f, g, o per row
  Mat<T> h_prev_;  // state entering each row's step
  Mat<T> c_prev_;
  Mat<T> tanh_c_;  // tanh of the candidate cell state
};

/// Forward and backward LSTMs; output is [forward_h | backward_h].
template <typename T>
class BlstmLayer {
 public:
  BlstmLayer() = default;
  BlstmLayer(const std::string& prefix, int input_dim, int hidden);

  void init(std::mt19937_64& rng);
  Mat<T> forward(const Mat<T>& x, const ColVec<T>& mask, std::size_t steps,
                 std::size_t batch);
  Mat<T> backward(const Mat<T>& dy, bool need_dx);
  std::vector<Param<T>*> params();

  LstmDirection<T> fwd, bwd;
};

// ---------------------------------------------------------------------------
// Batch normalization over valid rows

template <typename T>
class BatchNormLayer {
 public:
  BatchNormLayer() = default;
  BatchNormLayer(const std::string& prefix, int features, double momentum,
                 double epsilon = 1e-3);

  /// Train mode normalizes with statistics over rows with mask 1 and updates
  /// the running averages; infer mode uses the running averages. Masked rows
  /// output zero. Throws ParameterError if no row is valid in train mode.
  Mat<T> forward(const Mat<T>& x, const ColVec<T>& mask, Mode mode);
  Mat<T> backward(const Mat<T>& dy);

  std::vector<Param<T>*> params() { return {&gamma, &beta}; }
  std::vector<Buffer<T>> buffers();

  Param<T> gamma, beta;
  Mat<T> running_mean, running_var;  // 1 x F
  bool update_running = true;

 private:
  double momentum_ = 0.99;
  double epsilon_ = 1e-3;
  Mode mode_ = Mode::kInfer;
  ColVec<T> mask_;
  Mat<T> xhat_;
  RowVec<T> inv_std_;
  T count_ = 0;
};

// ---------------------------------------------------------------------------

template <typename T>
class DropoutLayer {
 public:
  explicit DropoutLayer(double rate = 0.0);

  /// Inverted dropout in train mode; identity in infer mode or at rate 0.
  Mat<T> forward(const Mat<T>& x, Mode mode, std::mt19937_64& rng);
  Mat<T> backward(const Mat<T>& dy) const;

  double rate() const { return rate_; }

 private:
  double rate_;
  bool active_ = false;
  Mat<T> keep_;  // 0 or 1/(1-rate)
};

template <typename T>
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(const std::string& prefix, int input_dim, int output_dim);

  void init(std::mt19937_64& rng);
  /// y = x W + b for each row of x.
  Mat<T> forward(const Mat<T>& x);
  Mat<T> backward(const Mat<T>& dy);
  std::vector<Param<T>*> params() { return {&w, &b}; }

  Param<T> w, b;

 private:
  Mat<T> input_;
};

template <typename T>
class PReluLayer {
 public:
  PReluLayer() = default;
  PReluLayer(const std::string& prefix, int features, double initial_slope = 0.25);

  /// y = x for x > 0, slope * x otherwise; one slope per column.
  Mat<T> forward(const Mat<T>& x);
  Mat<T> backward(const Mat<T>& dy);
  std::vector<Param<T>*> params() { return {&slope}; }

  Param<T> slope;

 private:
  Mat<T> input_;
};

// ---------------------------------------------------------------------------

template <typename T>
struct SoftmaxCrossEntropy {
  double loss = 0.0;  // mean over rows of -log p[label]
  Mat<T> probs;
  Mat<T> dlogits;  // gradient of `loss` w.r.t. logits
};

/// Max-subtracted softmax and mean categorical cross-entropy. Throws
/// ParameterError when a label is outside [0, C).
template <typename T>
SoftmaxCrossEntropy<T> softmax_cross_entropy(const Mat<T>& logits,
                                             const std::vector<int>& labels);

template <typename T>
Mat<T> softmax_rows(const Mat<T>& logits);

}  // namespace har::nn
