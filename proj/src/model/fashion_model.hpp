#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "autodiff/transformer.hpp"
#include "corpus/vocabulary.hpp"
#include "model/model_config.hpp"

namespace ffae::model {

using ad::Value;
using corpus::TokenId;

struct ContrastiveOutput {
    Value image_states;  // (P + 1) x D, row 0 is v_cls
    Value text_states;   // L x D, row 0 is w_cls
    Value pooled_v;      // 1 x D
    Value pooled_w;      // 1 x D
};

// Image encoder plus one stack of shared transformer layers that acts as the
// text encoder, the fusion encoder, or both split at `split_point`.
class FashionModel {
public:
    FashionModel(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return config_; }
    ad::ParameterSet& parameters() noexcept { return params_; }
    const ad::ParameterSet& parameters() const noexcept { return params_; }

    // patches: patch_count x patch_dim. Returns (patch_count + 1) x D.
    Value encode_image(const ad::Tensor& patches) const;

    // Token + position embeddings through shared layers [0, n_layers),
    // self-attention only, without the final norm.
    Value text_encoder_states(std::span<const TokenId> ids, std::size_t n_layers) const;
    // Text through the whole shared stack (contrastive mode), normalized.
    Value encode_text(std::span<const TokenId> ids) const;

    // LN(MLP(v_cls + w_cls) + v_cls + w_cls)
    Value fusion_token(const Value& v_cls, const Value& w_cls) const;

    ContrastiveOutput forward_contrastive(const ad::Tensor& patches, std::span<const TokenId> ids) const;

    // Layers [0, split) encode the text; layers [split, end) add
    // cross-attention to `image_states`. Returns L x D fused states.
    Value forward_fusion(std::span<const TokenId> ids, const Value& image_states) const;
    Value fuse_text_states(const Value& text_states, const Value& image_states) const;

    // Image-side sequence (masked rows already replaced by F) through the
    // fusion layers with cross-attention to `text_states`; returns
    // positions.size() x K label logits. Throws when positions is empty.
    Value forward_reconstruction(const Value& text_states, const Value& masked_image,
                                 std::span<const std::size_t> positions) const;
    Value forward_reconstruction(std::span<const TokenId> ids, const Value& masked_image,
                                 std::span<const std::size_t> positions) const;

    // Shared AETP/MLM prediction head: states -> vocabulary logits.
    Value text_logits(const Value& states) const { return text_head_(states); }
    // Matched / unmatched logits (index 1 = matched) from a fused [CLS] row.
    Value itm_logits(const Value& cls_state) const { return itm_head_(cls_state); }

    const ad::TransformerBlockParams& shared_block(std::size_t i) const { return shared_.at(i); }
    const ad::Linear& text_head() const noexcept { return text_head_; }
    const ad::Linear& apir_head() const noexcept { return apir_head_; }
    const ad::Linear& itm_head() const noexcept { return itm_head_; }
    const ad::Linear& fusion_mlp_hidden() const noexcept { return fusion_hidden_; }
    const ad::Linear& fusion_mlp_output() const noexcept { return fusion_output_; }
    const ad::LayerNormParams& fusion_token_norm() const noexcept { return fusion_token_norm_; }

private:
    ModelConfig config_;
    ad::ParameterSet params_;

    ad::Linear patch_projection_;
    Value image_cls_;
    Value image_positions_;
    std::vector<ad::TransformerBlockParams> image_blocks_;
    ad::LayerNormParams image_norm_;

    Value token_embedding_;
    Value text_positions_;
    std::vector<ad::TransformerBlockParams> shared_;
    ad::LayerNormParams text_norm_;
    ad::LayerNormParams fusion_norm_;

    ad::Linear fusion_hidden_;
    ad::Linear fusion_output_;
    ad::LayerNormParams fusion_token_norm_;

    ad::Linear text_head_;
    ad::Linear apir_head_;
    ad::Linear itm_head_;
};

}  // namespace ffae::model
