#pragma once

#include <string>

#include "autodiff/ops.hpp"
#include "autodiff/parameters.hpp"
#include "common/rng.hpp"

namespace ffae::ad {

struct Linear {
    Value weight;  // in x out
    Value bias;    // 1 x out

    static Linear create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                         double init_std, Rng& rng);
    Value operator()(const Value& x) const { return add(matmul(x, weight), bias); }
};

struct LayerNormParams {
    Value gain;
    Value bias;

    static LayerNormParams create(ParameterSet& params, const std::string& name, std::size_t width);
    Value operator()(const Value& x) const { return layer_norm(x, gain, bias); }
};

struct AttentionParams {
    LayerNormParams norm;
    Linear query, key, value, output;
};

struct MlpParams {
    LayerNormParams norm;
    Linear hidden, output;
};

// Pre-norm encoder block. `cross` is used only when the block is given a
// context sequence to attend to.
struct TransformerBlockParams {
    AttentionParams self_attention;
    AttentionParams cross_attention;
    MlpParams mlp;
    std::size_t heads = 1;

    static TransformerBlockParams create(ParameterSet& params, const std::string& prefix, std::size_t width,
                                         std::size_t hidden, std::size_t heads, bool with_cross, double init_std,
                                         Rng& rng);
};

Tensor random_normal(std::size_t rows, std::size_t cols, double std, Rng& rng);

// x + SelfAttn(LN(x)) [+ CrossAttn(LN(.), context)] + MLP(LN(.)), each with a residual.
Value transformer_block(const Value& x, const TransformerBlockParams& p, const Value* context = nullptr);

}  // namespace ffae::ad
