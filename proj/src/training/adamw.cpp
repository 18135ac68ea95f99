#include "training/adamw.hpp"

#include <cmath>
#include <stdexcept>

#include "common/binary_io.hpp"

namespace ffae::training {

void AdamW::step(ad::ParameterSet& params, const std::function<bool(const std::string&)>& trainable) {
    for (const auto& [name, p] : params) {
        if (trainable && !trainable(name)) continue;
        for (double g : p.grad().data())
            if (!std::isfinite(g)) throw std::runtime_error("AdamW: non-finite gradient in parameter " + name);
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (auto& [name, p] : params) {
        if (trainable && !trainable(name)) continue;
        auto& mom = moments_[name];
        ad::Tensor& value = p.mutable_value();
        if (!mom.m.same_shape(value)) {
            mom.m = ad::Tensor(value.rows(), value.cols());
            mom.v = ad::Tensor(value.rows(), value.cols());
        }
        const ad::Tensor& grad = p.grad();
        const bool has_grad = grad.same_shape(value);
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = has_grad ? grad[i] : 0.0;
            mom.m[i] = config_.beta1 * mom.m[i] + (1.0 - config_.beta1) * g;
            mom.v[i] = config_.beta2 * mom.v[i] + (1.0 - config_.beta2) * g * g;
            const double m_hat = mom.m[i] / bc1;
            const double v_hat = mom.v[i] / bc2;
            value[i] -= config_.lr * (m_hat / (std::sqrt(v_hat) + config_.eps) + config_.weight_decay * value[i]);
        }
    }
}

void AdamW::save(std::ostream& out) const {
    io::write_u64(out, t_);
    std::vector<ad::NamedTensor> entries;
    for (const auto& [name, mom] : moments_) {
        entries.push_back({"m." + name, mom.m});
        entries.push_back({"v." + name, mom.v});
    }
    ad::write_named_tensors(out, entries);
}

void AdamW::load(std::istream& in) {
    t_ = io::read_u64(in);
    moments_.clear();
    for (auto& e : ad::read_named_tensors(in)) {
        if (e.name.size() < 2 || (e.name[0] != 'm' && e.name[0] != 'v') || e.name[1] != '.')
            throw std::runtime_error("optimizer state: unexpected entry " + e.name);
        auto& mom = moments_[e.name.substr(2)];
        (e.name[0] == 'm' ? mom.m : mom.v) = std::move(e.tensor);
    }
}

}  // namespace ffae::training
