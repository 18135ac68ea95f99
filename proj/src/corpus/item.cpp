#include "corpus/item.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "corpus/generator.hpp"

namespace ffae::corpus {

std::string_view attribute_name(Attribute a) {
    switch (a) {
        case Attribute::title: return "title";
        case Attribute::category: return "category";
        case Attribute::subcategory: return "subcategory";
        case Attribute::gender: return "gender";
        case Attribute::composition: return "composition";
        case Attribute::season: return "season";
    }
    return "unknown";
}

std::optional<Attribute> parse_attribute(std::string_view name) {
    for (Attribute a : kAttributeOrder)
        if (attribute_name(a) == name) return a;
    return std::nullopt;
}

void validate_item(const ItemRecord& item, std::size_t patch_size) {
    const auto fail = [&](const std::string& what) {
        throw std::invalid_argument("item " + item.id + ": " + what);
    };
    for (Attribute a : kAttributeOrder)
        if (item.attribute(a).empty()) fail("missing attribute " + std::string(attribute_name(a)));
    if (item.description.find_first_not_of(' ') == std::string::npos) fail("empty description");
    if (item.attribute(Attribute::title).find_first_not_of(' ') == std::string::npos) fail("empty title");
    const auto cats = category_set();
    if (std::find(cats.begin(), cats.end(), item.attribute(Attribute::category)) == cats.end())
        fail("category " + item.attribute(Attribute::category) + " is not in the closed set");
    const Image& img = item.image;
    if (img.pixels.size() != img.height * img.width * img.channels) fail("pixel count does not match H*W*C");
    if (patch_size == 0 || img.height % patch_size != 0 || img.width % patch_size != 0)
        fail("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
             " not divisible by patch size " + std::to_string(patch_size));
    for (float p : img.pixels)
        if (!(p >= 0.0f && p <= 1.0f)) fail("pixel outside [0, 1]");
}

}  // namespace ffae::corpus
