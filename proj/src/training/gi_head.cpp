// SPDX-License-Identifier: Apache-2.0

#include <har/training/gi_head.hpp>

#include <cmath>

namespace har::training {

std::vector<std::size_t> gi_timesteps(const Batch& batch, std::size_t b, int k) {
  std::vector<std::size_t> out;
  for (std::size_t t = batch.max_len; t-- > 0 && static_cast<int>(out.size()) < k;)
    if (batch.valid(b, t)) out.push_back(t);
  std::reverse(out.begin(), out.end());
  return out;
}

template <typename T>
StepLogits<T> head_on_top(Model<T>& model, const Mat<T>& top, const Batch& batch, int k) {
  if (k < 1) throw ParameterError("GI width must be >= 1");
  StepLogits<T> s;
  s.offsets.push_back(0);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const auto steps = gi_timesteps(batch, b, k);
    if (steps.empty()) throw ParameterError("sample without valid timesteps in batch");
    for (auto t : steps) {
      s.source.push_back(static_cast<Eigen::Index>(t * batch.batch + b));
      s.timestep.push_back(t);
    }
    s.offsets.push_back(s.source.size());
  }
  Mat<T> features(static_cast<Eigen::Index>(s.source.size()), top.cols());
  for (std::size_t r = 0; r < s.source.size(); ++r)
    features.row(static_cast<Eigen::Index>(r)) = top.row(s.source[r]);
  s.logits = model.head_forward(features);
  return s;
}

template <typename T>
StepLogits<T> forward_gi(Model<T>& model, const Batch& batch, int k, Mode mode,
                         std::mt19937_64& rng) {
  const Mat<T> top = model.forward_stack(batch, mode, rng);
  return head_on_top(model, top, batch, k);
}

template <typename T>
HeadLoss<T> gi_loss(const StepLogits<T>& steps, const std::vector<int>& labels) {
  const std::size_t n = steps.offsets.size() - 1;
  if (labels.size() != n) throw ShapeError("gi_loss: one label per sample required");
  const Eigen::Index c = steps.logits.cols();
  HeadLoss<T> out;
  out.dlogits.resize(steps.logits.rows(), c);
  double total = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const int y = labels[b];
    if (y < 0 || y >= c) throw ParameterError("label outside [0, C)");
    const auto k = static_cast<double>(steps.steps_of(b));
    const double w = 1.0 / (static_cast<double>(n) * k);
    for (std::size_t r = steps.offsets[b]; r < steps.offsets[b + 1]; ++r) {
      const auto row = steps.logits.row(static_cast<Eigen::Index>(r));
      const T mx = row.maxCoeff();
      const T log_z = std::log((row.array() - mx).exp().sum());
      total -= w * static_cast<double>(row(y) - mx - log_z);
      auto d = out.dlogits.row(static_cast<Eigen::Index>(r));
      d = ((row.array() - mx - log_z).exp() * static_cast<T>(w)).matrix();
      d(y) -= static_cast<T>(w);
    }
  }
  out.loss = total;
  if (!std::isfinite(out.loss)) throw NumericalFault("non-finite GI loss");
  return out;
}

template <typename T>
Mat<T> head_backward_to_top(Model<T>& model, const StepLogits<T>& steps,
                            const Mat<T>& dlogits, Eigen::Index top_rows) {
  const Mat<T> dfeat = model.head_backward(dlogits);
  Mat<T> d_top = Mat<T>::Zero(top_rows, dfeat.cols());
  for (std::size_t r = 0; r < steps.source.size(); ++r)
    d_top.row(steps.source[r]) += dfeat.row(static_cast<Eigen::Index>(r));
  return d_top;
}

template <typename T>
Mat<T> forward_many_to_one(Model<T>& model, const Batch& batch, Mode mode,
                           std::mt19937_64& rng) {
  const Mat<T> top = model.forward_stack(batch, mode, rng);
  Mat<T> last(static_cast<Eigen::Index>(batch.batch), top.cols());
  for (std::size_t b = 0; b < batch.batch; ++b) {
    if (batch.lengths[b] == 0) throw ParameterError("empty sample in batch");
    const std::size_t t = batch.lengths[b] - 1;
    last.row(static_cast<Eigen::Index>(b)) =
        top.row(static_cast<Eigen::Index>(t * batch.batch + b));
  }
  return model.head_forward(last);
}

template <typename T>
Mat<T> ensemble_probabilities(const StepLogits<T>& steps) {
  const Mat<T> p = nn::softmax_rows(steps.logits);
  const std::size_t n = steps.offsets.size() - 1;
  Mat<T> out = Mat<T>::Zero(static_cast<Eigen::Index>(n), p.cols());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t r = steps.offsets[b]; r < steps.offsets[b + 1]; ++r)
      out.row(static_cast<Eigen::Index>(b)) += p.row(static_cast<Eigen::Index>(r));
    out.row(static_cast<Eigen::Index>(b)) /= static_cast<T>(steps.steps_of(b));
  }
  return out;
}

namespace {

template <typename T>
LossParts run(Model<T>& model, const Batch& batch, HeadKind head, Mode mode,
              std::mt19937_64& rng, bool with_grad) {
  if (with_grad) model.zero_grad();
  LossParts parts;
  if (head == HeadKind::kGradientInjection) {
    const Mat<T> top = model.forward_stack(batch, mode, rng);
    const auto steps = head_on_top(model, top, batch, model.config().gi_k);
    const auto hl = gi_loss(steps, batch.labels);
    parts.ce = hl.loss;
    if (with_grad)
      model.backward_stack(head_backward_to_top(model, steps, hl.dlogits, top.rows()));
  } else {
    const Mat<T> top = model.forward_stack(batch, mode, rng);
    Mat<T> last(static_cast<Eigen::Index>(batch.batch), top.cols());
    for (std::size_t b = 0; b < batch.batch; ++b)
      last.row(static_cast<Eigen::Index>(b)) = top.row(
          static_cast<Eigen::Index>((batch.lengths[b] - 1) * batch.batch + b));
    const auto ce = nn::softmax_cross_entropy(model.head_forward(last), batch.labels);
    parts.ce = ce.loss;
    if (with_grad) {
      const Mat<T> dlast = model.head_backward(ce.dlogits);
      Mat<T> d_top = Mat<T>::Zero(top.rows(), top.cols());
      for (std::size_t b = 0; b < batch.batch; ++b)
        d_top.row(static_cast<Eigen::Index>((batch.lengths[b] - 1) * batch.batch + b)) =
            dlast.row(static_cast<Eigen::Index>(b));
      model.backward_stack(d_top);
    }
  }
  parts.l2 = model.l2_penalty();
  if (with_grad) model.add_l2_grad();
  return parts;
}

}  // namespace

template <typename T>
LossParts loss_and_gradients(Model<T>& model, const Batch& batch, HeadKind head,
                             Mode mode, std::mt19937_64& rng) {
  return run(model, batch, head, mode, rng, true);
}

template <typename T>
LossParts loss_only(Model<T>& model, const Batch& batch, HeadKind head, Mode mode,
                    std::mt19937_64& rng) {
  return run(model, batch, head, mode, rng, false);
}

template <typename T>
Mat<T> predict_batch(Model<T>& model, const Batch& batch, HeadKind head) {
  std::mt19937_64 unused(0);  // infer mode draws nothing
  if (head == HeadKind::kManyToOne)
    return nn::softmax_rows(forward_many_to_one(model, batch, Mode::kInfer, unused));
  return ensemble_probabilities(
      forward_gi(model, batch, model.config().gi_k, Mode::kInfer, unused));
}

template <typename T>
std::vector<double> predict(Model<T>& model, const PoseSequence& seq, HeadKind head) {
  const PoseSequence* one[] = {&seq};
  const Mat<T> p = predict_batch(model, make_batch(one), head);
  std::vector<double> out(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index c = 0; c < p.cols(); ++c) out[static_cast<std::size_t>(c)] = p(0, c);
  return out;
}

#define HAR_INSTANTIATE(T)                                                                  \
  template StepLogits<T> head_on_top<T>(Model<T>&, const Mat<T>&, const Batch&, int);      \
  template StepLogits<T> forward_gi<T>(Model<T>&, const Batch&, int, Mode,                 \
                                       std::mt19937_64&);                                  \
  template HeadLoss<T> gi_loss<T>(const StepLogits<T>&, const std::vector<int>&);          \
  template Mat<T> head_backward_to_top<T>(Model<T>&, const StepLogits<T>&, const Mat<T>&,  \
                                          Eigen::Index);                                   \
  template Mat<T> forward_many_to_one<T>(Model<T>&, const Batch&, Mode, std::mt19937_64&); \
  template Mat<T> ensemble_probabilities<T>(const StepLogits<T>&);                         \
  template LossParts loss_and_gradients<T>(Model<T>&, const Batch&, HeadKind, Mode,        \
                                           std::mt19937_64&);                              \
  template LossParts loss_only<T>(Model<T>&, const Batch&, HeadKind, Mode,                 \
                                  std::mt19937_64&);                                       \
  template Mat<T> predict_batch<T>(Model<T>&, const Batch&, HeadKind);                     \
  template std::vector<double> predict<T>(Model<T>&, const PoseSequence&, HeadKind);
HAR_INSTANTIATE(float)
HAR_INSTANTIATE(double)
#undef HAR_INSTANTIATE

}  // namespace har::training
