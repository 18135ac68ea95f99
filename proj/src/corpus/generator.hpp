#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpus/item.hpp"

namespace ffae::corpus {

struct GeneratorConfig {
    std::vector<std::pair<std::string, std::size_t>> category_counts;
    std::size_t image_size = 32;
    std::size_t channels = 3;
    std::size_t patch_size = 8;

    // n items spread over the first `categories` closed-set categories; the
    // remainder goes to the earliest categories.
    static GeneratorConfig balanced(std::size_t n, std::size_t categories);
    std::size_t total() const;
};

// Closed vocabularies the generator draws from.
std::span<const std::string_view> category_set();
std::span<const std::string_view> color_set();
std::span<const std::string_view> composition_set();

// Pixels are a pure function of (category, composition, color): category picks
// the silhouette, composition the texture, the color word the RGB hue.
Image render_item_image(std::string_view category, std::string_view composition, std::string_view color,
                        std::size_t size, std::size_t channels);

std::vector<ItemRecord> generate_corpus(const GeneratorConfig& config, std::uint64_t seed);

// First word of the title, which the generator always sets to the color.
std::string_view title_color(const ItemRecord& item);

}  // namespace ffae::corpus
