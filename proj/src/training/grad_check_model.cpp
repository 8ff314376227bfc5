// SPDX-License-Identifier: Apache-2.0

#include <har/training/grad_check_model.hpp>

#include <random>

namespace har::training {

Batch random_pose_batch(std::size_t batch, std::size_t steps, std::size_t short_length,
                        int n_classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(50.0, 400.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, n_classes - 1);
  std::vector<PoseSequence> seqs(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t len = b + 1 == batch && batch > 1 ? short_length : steps;
    for (std::size_t t = 0; t < len; ++t) {
      PoseVector v{};
      for (std::size_t k = 0; k < kNumKeypoints; ++k) {
        const bool on = u(rng) > 0.1;
        v.values[2 * k] = on ? coord(rng) : 0.0;
        v.values[2 * k + 1] = on ? coord(rng) : 0.0;
        v.mask[2 * k] = v.mask[2 * k + 1] = on;
      }
      seqs[b].frames.push_back(v);
    }
    seqs[b].label = label(rng);
    seqs[b].clip_id = "gc" + std::to_string(b);
  }
  std::vector<const PoseSequence*> ptrs;
  for (const auto& s : seqs) ptrs.push_back(&s);
  return make_batch(ptrs);
}

nn::GradCheckReport grad_check_model(const ModelGradCheckOptions& opt) {
  const Batch batch =
      random_pose_batch(opt.batch, opt.steps, opt.short_length, opt.model.n_classes,
                        derive_seed(opt.seed, 1));
  Model<double> model(opt.model, derive_seed(opt.seed, 2));

  std::vector<PoseSequence> seqs(batch.batch);
  for (std::size_t b = 0; b < batch.batch; ++b)
    for (std::size_t t = 0; t < batch.lengths[b]; ++t) {
      PoseVector v{};
      for (std::size_t j = 0; j < kPoseDim; ++j) {
        v.values[j] = batch.value(b, t, j);
        v.mask[j] = batch.entry_valid(b, t, j);
      }
      seqs[b].frames.push_back(v);
    }
  std::vector<double> mean, scale;
  nn::fit_input_normalization(seqs, mean, scale);
  model.set_input_normalization(Eigen::Map<const nn::RowVec<double>>(mean.data(), mean.size()),
                                Eigen::Map<const nn::RowVec<double>>(scale.data(), scale.size()));
  model.set_bn_running_update(false);

  const nn::Mode mode = opt.train_mode ? nn::Mode::kTrain : nn::Mode::kInfer;
  const std::uint64_t drop_seed = derive_seed(opt.seed, 3);
  std::mt19937_64 rng(drop_seed);
  loss_and_gradients(model, batch, HeadKind::kGradientInjection, mode, rng);
  auto params = model.params();
  if (opt.corrupt) params.front()->grad(0, 0) += 1.0;

  auto loss = [&] {
    std::mt19937_64 r(drop_seed);
    return loss_only(model, batch, HeadKind::kGradientInjection, mode, r).total();
  };
  return nn::grad_check(params, loss, opt.epsilon, opt.per_param, derive_seed(opt.seed, 4));
}

}  // namespace har::training
