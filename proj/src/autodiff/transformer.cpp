#include "autodiff/transformer.hpp"

#include <stdexcept>

namespace ffae::ad {

Tensor random_normal(std::size_t rows, std::size_t cols, double std, Rng& rng) {
    Tensor t(rows, cols);
    for (double& v : t.data()) v = std * rng.normal();
    return t;
}

Linear Linear::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                      double init_std, Rng& rng) {
    Linear l;
    l.weight = params.add(name + ".weight", random_normal(in, out, init_std, rng));
    l.bias = params.add(name + ".bias", Tensor(1, out));
    return l;
}

LayerNormParams LayerNormParams::create(ParameterSet& params, const std::string& name, std::size_t width) {
    LayerNormParams n;
    n.gain = params.add(name + ".gain", Tensor(1, width, 1.0));
    n.bias = params.add(name + ".bias", Tensor(1, width));
    return n;
}

namespace {

AttentionParams make_attention(ParameterSet& params, const std::string& prefix, std::size_t width,
                               double init_std, Rng& rng) {
    AttentionParams a;
    a.norm = LayerNormParams::create(params, prefix + ".norm", width);
    a.query = Linear::create(params, prefix + ".query", width, width, init_std, rng);
    a.key = Linear::create(params, prefix + ".key", width, width, init_std, rng);
    a.value = Linear::create(params, prefix + ".value", width, width, init_std, rng);
    a.output = Linear::create(params, prefix + ".output", width, width, init_std, rng);
    return a;
}

Value attend(const AttentionParams& a, const Value& normed, const Value& context, std::size_t heads) {
    return a.output(attention(a.query(normed), a.key(context), a.value(context), heads));
}

}  // namespace

TransformerBlockParams TransformerBlockParams::create(ParameterSet& params, const std::string& prefix,
                                                      std::size_t width, std::size_t hidden, std::size_t heads,
                                                      bool with_cross, double init_std, Rng& rng) {
    if (heads == 0 || width % heads != 0)
        throw std::invalid_argument("transformer block: width must be divisible by heads");
    TransformerBlockParams b;
    b.heads = heads;
    b.self_attention = make_attention(params, prefix + ".self_attn", width, init_std, rng);
    if (with_cross) b.cross_attention = make_attention(params, prefix + ".cross_attn", width, init_std, rng);
    b.mlp.norm = LayerNormParams::create(params, prefix + ".mlp.norm", width);
    b.mlp.hidden = Linear::create(params, prefix + ".mlp.hidden", width, hidden, init_std, rng);
    b.mlp.output = Linear::create(params, prefix + ".mlp.output", hidden, width, init_std, rng);
    return b;
}

Value transformer_block(const Value& x, const TransformerBlockParams& p, const Value* context) {
    const Value normed = p.self_attention.norm(x);
    Value h = add(x, attend(p.self_attention, normed, normed, p.heads));
    if (context) {
        if (!p.cross_attention.query.weight.defined())
            throw std::invalid_argument("transformer block has no cross-attention parameters");
        if (context->cols() != x.cols())
            throw std::invalid_argument("cross-attention context width " + std::to_string(context->cols()) +
                                        " != " + std::to_string(x.cols()));
        h = add(h, attend(p.cross_attention, p.cross_attention.norm(h), *context, p.heads));
    }
    const Value m = p.mlp.output(gelu(p.mlp.hidden(p.mlp.norm(h))));
    return add(h, m);
}

}  // namespace ffae::ad
