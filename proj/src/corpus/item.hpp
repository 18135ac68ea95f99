#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ffae::corpus {

enum class Attribute { title = 0, category, subcategory, gender, composition, season };

inline constexpr std::size_t kAttributeCount = 6;
inline constexpr std::array<Attribute, kAttributeCount> kAttributeOrder = {
    Attribute::title,  Attribute::category,    Attribute::subcategory,
    Attribute::gender, Attribute::composition, Attribute::season,
};

std::string_view attribute_name(Attribute a);
std::optional<Attribute> parse_attribute(std::string_view name);

// H x W x C, row-major with channels innermost, intensities in [0, 1].
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<float> pixels;

    float at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }
    float& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * channels + c]; }

    friend bool operator==(const Image&, const Image&) = default;
};

struct ItemRecord {
    std::string id;
    Image image;
    std::string description;
    std::array<std::string, kAttributeCount> attributes;  // indexed by Attribute

    const std::string& attribute(Attribute a) const { return attributes[static_cast<std::size_t>(a)]; }
    std::string& attribute(Attribute a) { return attributes[static_cast<std::size_t>(a)]; }

    friend bool operator==(const ItemRecord&, const ItemRecord&) = default;
};

// Throws std::invalid_argument describing the first violated invariant.
void validate_item(const ItemRecord& item, std::size_t patch_size);

}  // namespace ffae::corpus
