#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "common/rng.hpp"
#include "model/fashion_model.hpp"
#include "objectives/objectives.hpp"
#include "training/adamw.hpp"
#include "training/run_config.hpp"

namespace ffae::training {

struct LossRecord {
    std::size_t step = 0;
    objectives::Task task = objectives::Task::itc;
    double loss = 0.0;
    friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

struct TaskStats {
    std::size_t count = 0;
    double last = 0.0;
    double ema = 0.0;  // decay 0.95, seeded by the first value
};

// CSV with header step,task,loss.
void write_loss_log(const std::filesystem::path& path, std::span<const LossRecord> records);
std::vector<LossRecord> read_loss_log(const std::filesystem::path& path);

AdamWConfig adamw_config(const RunConfig& config);

// One sampled task per step on a batch drawn without replacement.
class Pretrainer {
public:
    Pretrainer(model::FashionModel& model, std::span<const objectives::TrainingItem> data, const RunConfig& config);

    void step();
    void run(std::size_t steps, const std::function<void(const LossRecord&)>& on_record = {});

    std::size_t step_count() const noexcept { return step_; }
    const std::vector<LossRecord>& log() const noexcept { return log_; }
    const std::array<TaskStats, objectives::kTaskCount>& stats() const noexcept { return stats_; }
    const AdamW& optimizer() const noexcept { return optimizer_; }
    const Rng& rng() const noexcept { return rng_; }

    // model.ffck, optimizer.ffos, model.cfg and loss.csv under `dir`.
    void save_checkpoint(const std::filesystem::path& dir) const;
    // Restores parameters, optimizer moments, RNG state, step and loss log.
    void load_checkpoint(const std::filesystem::path& dir);

private:
    void record(objectives::Task task, double loss);

    model::FashionModel& model_;
    std::span<const objectives::TrainingItem> data_;
    RunConfig config_;
    objectives::TaskSchedule schedule_;
    AdamW optimizer_;
    Rng rng_;
    std::size_t step_ = 0;
    std::vector<LossRecord> log_;
    std::array<TaskStats, objectives::kTaskCount> stats_{};
};

}  // namespace ffae::training
