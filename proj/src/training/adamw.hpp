#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>

#include "autodiff/parameters.hpp"

namespace ffae::training {

struct AdamWConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    friend bool operator==(const AdamWConfig&, const AdamWConfig&) = default;
};

// Decoupled weight decay with bias-corrected moments:
//   p -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
class AdamW {
public:
    explicit AdamW(AdamWConfig config = {}) : config_(config) {}

    // Updates every parameter accepted by `trainable` (all when empty).
    // Throws before touching anything if a gradient is non-finite.
    void step(ad::ParameterSet& params, const std::function<bool(const std::string&)>& trainable = {});

    std::size_t step_count() const noexcept { return t_; }
    const AdamWConfig& config() const noexcept { return config_; }
    void set_lr(double lr) noexcept { config_.lr = lr; }

    void save(std::ostream& out) const;
    void load(std::istream& in);

    friend bool operator==(const AdamW&, const AdamW&) = default;

private:
    struct Moments {
        ad::Tensor m;
        ad::Tensor v;
        friend bool operator==(const Moments&, const Moments&) = default;
    };
    AdamWConfig config_;
    std::size_t t_ = 0;
    std::map<std::string, Moments> moments_;

};

}  // namespace ffae::training
