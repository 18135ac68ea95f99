#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "autodiff/grad_check.hpp"
#include "corpus/vocabulary.hpp"
#include "model/fashion_model.hpp"
#include "objectives/objectives.hpp"

namespace ffae::objectives {

enum class CheckScale {
    tiny,  // 16x16 images in 4x4 patches, width 8, two shared layers
    desk,  // the default desk architecture on 32x32 images in 8x8 patches
};

// A two-item corpus (two categories) and a model for checking every loss against finite
// differences.
struct LossCheckFixture {
    corpus::Vocabulary vocab;
    std::vector<TrainingItem> items;
    std::unique_ptr<model::FashionModel> model;
    std::uint64_t seed = 0;

    static LossCheckFixture make(std::uint64_t seed, CheckScale scale = CheckScale::tiny, double init_std = 0.3);
    // Rebuilds the task's masked batch from a fixed RNG state each call, so
    // repeated evaluations differ only through the parameters.
    ad::Value loss(Task task) const;
};

inline ad::GradCheckOptions loss_check_defaults() {
    ad::GradCheckOptions o;
    o.eps = 1e-5;
    o.coords_per_param = 4;
    o.denominator_floor = 1e-5;
    return o;
}

ad::GradCheckResult check_task_gradients(Task task, std::uint64_t seed,
                                         const ad::GradCheckOptions& options = loss_check_defaults(),
                                         CheckScale scale = CheckScale::tiny);

}  // namespace ffae::objectives
