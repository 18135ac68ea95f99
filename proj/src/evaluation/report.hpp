#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "evaluation/retrieval.hpp"
#include "training/pretrain.hpp"

namespace ffae::evaluation {

struct NamedLossLog {
    std::string name;
    std::vector<training::LossRecord> records;
};

// Header protocol,direction,R@1,R@5,R@10,mean then one row per run in order.
std::string metrics_csv(std::span<const EvalRun> runs);
std::string summary_text(std::span<const EvalRun> runs, std::span<const NamedLossLog> logs);

// Writes metrics.csv and summary.txt into `dir`.
void write_report(const std::filesystem::path& dir, std::span<const EvalRun> runs,
                  std::span<const NamedLossLog> logs);

}  // namespace ffae::evaluation
