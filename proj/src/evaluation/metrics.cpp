#include "evaluation/metrics.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace ffae::evaluation {

ClassificationMetrics classification_metrics(std::span<const std::size_t> predictions,
                                             std::span<const std::size_t> labels, std::size_t num_classes) {
    if (predictions.empty()) throw std::invalid_argument("classification metrics: empty input");
    if (predictions.size() != labels.size())
        throw std::invalid_argument("classification metrics: " + std::to_string(predictions.size()) +
                                    " predictions vs " + std::to_string(labels.size()) + " labels");
    std::vector<std::size_t> tp(num_classes), fp(num_classes), fn(num_classes);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto p = predictions[i], t = labels[i];
        if (p >= num_classes || t >= num_classes)
            throw std::invalid_argument("classification metrics: class id outside [0, " +
                                        std::to_string(num_classes) + ")");
        if (p == t) {
            ++correct;
            ++tp[t];
        } else {
            ++fp[p];
            ++fn[t];
        }
    }
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const auto denom = 2 * tp[c] + fp[c] + fn[c];
        if (denom > 0) f1_sum += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
    }
    return {static_cast<double>(correct) / static_cast<double>(labels.size()),
            f1_sum / static_cast<double>(num_classes)};
}

}  // namespace ffae::evaluation
