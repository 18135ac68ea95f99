#pragma once

#include <cstddef>
#include <span>

namespace ffae::evaluation {

struct ClassificationMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;  // unweighted over all num_classes; 0/0 F1 counts as 0
};

// Throws on empty or mismatched input and on labels >= num_classes.
ClassificationMetrics classification_metrics(std::span<const std::size_t> predictions,
                                             std::span<const std::size_t> labels, std::size_t num_classes);

}  // namespace ffae::evaluation
