#include "model/fashion_model.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

#include "common/rng.hpp"

namespace ffae::model {

using ad::Tensor;

FashionModel::FashionModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    Rng rng(seed);
    const std::size_t d = config_.embed_dim;
    const double s = config_.init_std;

    patch_projection_ = ad::Linear::create(params_, "image.patch_projection", config_.patch_dim, d, s, rng);
    image_cls_ = params_.add("image.cls", ad::random_normal(1, d, s, rng));
    image_positions_ = params_.add("image.positions", ad::random_normal(config_.patch_count + 1, d, s, rng));
    for (std::size_t i = 0; i < config_.n_layers_image; ++i)
        image_blocks_.push_back(ad::TransformerBlockParams::create(params_, "image.layer" + std::to_string(i), d,
                                                                   config_.mlp_hidden, config_.n_heads, false, s, rng));
    image_norm_ = ad::LayerNormParams::create(params_, "image.norm", d);

    token_embedding_ = params_.add("text.token_embedding", ad::random_normal(config_.vocab_size, d, s, rng));
    text_positions_ = params_.add("text.positions", ad::random_normal(config_.max_text_len, d, s, rng));
    for (std::size_t i = 0; i < config_.n_layers_text_fusion; ++i)
        shared_.push_back(ad::TransformerBlockParams::create(params_, "shared.layer" + std::to_string(i), d,
                                                             config_.mlp_hidden, config_.n_heads,
                                                             i >= config_.split_point, s, rng));
    text_norm_ = ad::LayerNormParams::create(params_, "text.norm", d);
    fusion_norm_ = ad::LayerNormParams::create(params_, "fusion.norm", d);

    fusion_hidden_ = ad::Linear::create(params_, "fusion_token.mlp.hidden", d, d, s, rng);
    fusion_output_ = ad::Linear::create(params_, "fusion_token.mlp.output", d, d, s, rng);
    fusion_token_norm_ = ad::LayerNormParams::create(params_, "fusion_token.norm", d);

    text_head_ = ad::Linear::create(params_, "head.text", d, config_.vocab_size, s, rng);
    apir_head_ = ad::Linear::create(params_, "head.apir", d, config_.patch_labels, s, rng);
    itm_head_ = ad::Linear::create(params_, "head.itm", d, 2, s, rng);
}

Value FashionModel::encode_image(const Tensor& patches) const {
    if (patches.rows() != config_.patch_count || patches.cols() != config_.patch_dim)
        throw std::invalid_argument("encode_image: patch grid " + patches.shape_string() + " does not match config [" +
                                    std::to_string(config_.patch_count) + " x " + std::to_string(config_.patch_dim) +
                                    "]");
    const Value projected = patch_projection_(ad::constant(patches));
    const Value parts[] = {image_cls_, projected};
    Value x = ad::add(ad::concat_rows(parts), image_positions_);
    for (const auto& block : image_blocks_) x = ad::transformer_block(x, block);
    return image_norm_(x);
}

Value FashionModel::text_encoder_states(std::span<const TokenId> ids, std::size_t n_layers) const {
    if (ids.empty()) throw std::invalid_argument("encode_text: empty token sequence");
    if (ids.size() > config_.max_text_len)
        throw std::invalid_argument("encode_text: " + std::to_string(ids.size()) + " tokens exceed max_text_len " +
                                    std::to_string(config_.max_text_len));
    for (TokenId id : ids)
        if (id >= config_.vocab_size)
            throw std::invalid_argument("encode_text: token id " + std::to_string(id) + " >= vocab_size " +
                                        std::to_string(config_.vocab_size));
    std::vector<std::size_t> positions(ids.size());
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    Value x = ad::add(ad::gather_rows(token_embedding_, ids), ad::gather_rows(text_positions_, positions));
    for (std::size_t i = 0; i < n_layers; ++i) x = ad::transformer_block(x, shared_.at(i));
    return x;
}

Value FashionModel::encode_text(std::span<const TokenId> ids) const {
    return text_norm_(text_encoder_states(ids, config_.n_layers_text_fusion));
}

Value FashionModel::fusion_token(const Value& v_cls, const Value& w_cls) const {
    const Value summed = ad::add(v_cls, w_cls);
    const Value mlp = fusion_output_(ad::gelu(fusion_hidden_(summed)));
    return fusion_token_norm_(ad::add(mlp, summed));
}

ContrastiveOutput FashionModel::forward_contrastive(const Tensor& patches, std::span<const TokenId> ids) const {
    ContrastiveOutput out;
    out.image_states = encode_image(patches);
    out.text_states = encode_text(ids);
    out.pooled_v = ad::mean_pool(out.image_states);
    out.pooled_w = ad::mean_pool(out.text_states);
    return out;
}

Value FashionModel::fuse_text_states(const Value& text_states, const Value& image_states) const {
    Value x = text_states;
    for (std::size_t i = config_.split_point; i < config_.n_layers_text_fusion; ++i)
        x = ad::transformer_block(x, shared_[i], &image_states);
    return fusion_norm_(x);
}

Value FashionModel::forward_fusion(std::span<const TokenId> ids, const Value& image_states) const {
    return fuse_text_states(text_encoder_states(ids, config_.split_point), image_states);
}

Value FashionModel::forward_reconstruction(const Value& text_states, const Value& masked_image,
                                           std::span<const std::size_t> positions) const {
    if (positions.empty()) throw std::invalid_argument("forward_reconstruction: no masked positions");
    Value x = masked_image;
    for (std::size_t i = config_.split_point; i < config_.n_layers_text_fusion; ++i)
        x = ad::transformer_block(x, shared_[i], &text_states);
    return apir_head_(ad::gather_rows(fusion_norm_(x), positions));
}

Value FashionModel::forward_reconstruction(std::span<const TokenId> ids, const Value& masked_image,
                                           std::span<const std::size_t> positions) const {
    return forward_reconstruction(text_encoder_states(ids, config_.split_point), masked_image, positions);
}

}  // namespace ffae::model
