#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

namespace ffae::model {

struct ModelConfig {
    std::size_t embed_dim = 64;
    std::size_t n_layers_text_fusion = 4;
    std::size_t split_point = 2;  // layers [0, split) are the text encoder in fusion mode
    std::size_t n_layers_image = 2;
    std::size_t n_heads = 4;
    std::size_t mlp_hidden = 256;
    std::size_t vocab_size = 0;
    std::size_t patch_labels = 64;  // codebook size K
    std::size_t max_text_len = 96;
    std::size_t patch_count = 16;
    std::size_t patch_dim = 192;
    std::size_t patch_size = 8;
    double init_std = 0.02;

    // Throws std::invalid_argument on a violated invariant.
    void validate() const;

    std::string to_text() const;  // key=value lines
    static ModelConfig from_text(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static ModelConfig load(const std::filesystem::path& path);

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace ffae::model
