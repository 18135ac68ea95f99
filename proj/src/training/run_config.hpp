#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "model/model_config.hpp"
#include "objectives/objectives.hpp"

namespace ffae::training {

enum class Profile { desk, paper };
// Constant, or half-cosine decay from lr at step 0 toward 0 at `steps`.
enum class LrSchedule { constant, cosine };

// Pre-training run settings, read from a key=value file. The paper profile
// uses lr 1e-5 and batch 128; the desk profile is tuned for a 64-item corpus
// on one CPU core.
struct RunConfig {
    Profile profile = Profile::desk;
    double lr = 3e-4;
    LrSchedule lr_schedule = LrSchedule::constant;
    std::size_t batch_size = 16;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;
    std::size_t steps = 3000;
    std::uint64_t seed = 0;

    // Unnormalized task weights in aetp, apir, itc, mlm, itm order.
    std::array<double, objectives::kTaskCount> task_weights{1.0, 1.0, 1.0, 1.0, 1.0};
    bool simultaneous_aetp_mlm = false;

    std::size_t checkpoint_every = 0;  // 0 = only at the end
    double mlm_ratio = 0.15;
    std::size_t aetp_n = 2;
    double itc_temperature = 1.0;

    std::size_t embed_dim = 64;
    std::size_t n_layers_text_fusion = 4;
    std::size_t split_point = 2;
    std::size_t n_layers_image = 2;
    std::size_t n_heads = 4;
    std::size_t mlp_hidden = 256;

    std::string corpus_dir;
    std::string codebook_path;
    std::string out_dir;

    objectives::TaskSchedule schedule() const;
    double lr_at(std::size_t step) const;
    // Throws std::invalid_argument on a violated invariant.
    void validate() const;
    // Every key, one per line; parse_config(to_text()) reproduces *this.
    std::string to_text() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig profile_defaults(Profile profile);

// Absent keys keep their defaults; a `profile` key selects the defaults the
// other keys override. Unknown keys and malformed lines throw with the line number.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

// Architecture from the run settings plus data-derived sizes.
model::ModelConfig make_model_config(const RunConfig& config, std::size_t vocab_size, std::size_t patch_labels,
                                     std::size_t patch_count, std::size_t patch_dim, std::size_t patch_size,
                                     std::size_t max_text_len);

}  // namespace ffae::training
