#include "corpus/generator.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "common/rng.hpp"

namespace ffae::corpus {
namespace {

struct CategorySpec {
    std::string_view name;
    std::string_view noun;
    std::array<std::string_view, 2> subcategories;
};

constexpr std::array<CategorySpec, 8> kCategories = {{
    {"shirts", "shirt", {"oxford", "flannel"}},
    {"pants", "trousers", {"chinos", "joggers"}},
    {"dresses", "dress", {"maxi", "midi"}},
    {"jackets", "jacket", {"bomber", "blazer"}},
    {"sweaters", "sweater", {"crewneck", "cardigan"}},
    {"skirts", "skirt", {"pleated", "pencil"}},
    {"shorts", "shorts", {"cargo", "bermuda"}},
    {"coats", "coat", {"parka", "trench"}},
}};

constexpr std::array<std::string_view, 8> kCategoryNames = {"shirts",   "pants",  "dresses", "jackets",
                                                            "sweaters", "skirts", "shorts",  "coats"};

struct ColorSpec {
    std::string_view name;
    std::array<double, 3> rgb;
};

constexpr std::array<ColorSpec, 10> kColors = {{
    {"black", {0.10, 0.10, 0.10}},
    {"white", {0.92, 0.92, 0.88}},
    {"red", {0.85, 0.12, 0.12}},
    {"blue", {0.15, 0.30, 0.85}},
    {"green", {0.15, 0.65, 0.25}},
    {"yellow", {0.95, 0.85, 0.15}},
    {"grey", {0.50, 0.50, 0.50}},
    {"brown", {0.50, 0.30, 0.12}},
    {"pink", {0.95, 0.55, 0.70}},
    {"navy", {0.08, 0.12, 0.40}},
}};
constexpr std::array<std::string_view, 10> kColorNames = {"black", "white", "red",   "blue", "green",
                                                          "yellow", "grey", "brown", "pink", "navy"};

constexpr std::array<std::string_view, 6> kCompositions = {"cotton", "denim", "wool", "leather", "silk", "linen"};

constexpr std::array<std::string_view, 8> kAdjectives = {"classic", "relaxed", "slim",     "vintage",
                                                         "oversized", "cropped", "tailored", "washed"};
constexpr std::array<std::string_view, 3> kFits = {"regular fit", "loose fit", "slim fit"};
constexpr std::array<std::string_view, 6> kDetails = {"button closure", "zip fastening",   "patch pockets",
                                                      "ribbed trims",   "tonal stitching", "logo embroidery"};
constexpr std::array<std::string_view, 2> kGenders = {"men", "women"};
constexpr std::array<std::string_view, 4> kSeasons = {"spring", "summer", "autumn", "winter"};

constexpr double kBackground = 1.0;
constexpr double kTextureLow = 0.6;

const CategorySpec& category_spec(std::string_view name) {
    for (const auto& c : kCategories)
        if (c.name == name) return c;
    throw std::invalid_argument("unknown category " + std::string(name));
}

const ColorSpec& color_spec(std::string_view name) {
    for (const auto& c : kColors)
        if (c.name == name) return c;
    throw std::invalid_argument("unknown color " + std::string(name));
}

// Silhouette on normalized coordinates u (across) and v (down) in [0, 1).
bool inside_silhouette(std::string_view category, double u, double v) {
    const double du = std::abs(u - 0.5);
    if (category == "shirts") return (du < 0.22 && v > 0.15 && v < 0.9) || (du < 0.4 && v > 0.15 && v < 0.45);
    if (category == "pants")
        return (v > 0.1 && v < 0.92 && ((u > 0.28 && u < 0.47) || (u > 0.53 && u < 0.72))) ||
               (v > 0.1 && v < 0.3 && u > 0.28 && u < 0.72);
    if (category == "dresses") return v > 0.1 && v < 0.92 && du < 0.12 + 0.3 * (v - 0.1);
    if (category == "jackets") return du < 0.3 && v > 0.12 && v < 0.85 && !(du < 0.04 && v > 0.3);
    if (category == "sweaters") {
        const double a = (u - 0.5) / 0.38;
        const double b = (v - 0.5) / 0.36;
        return a * a + b * b < 1.0;
    }
    if (category == "skirts") return v > 0.35 && v < 0.85 && du < 0.15 + 0.5 * (v - 0.35);
    if (category == "shorts") return v > 0.2 && v < 0.55 && du < 0.25 && !(v > 0.38 && du < 0.04);
    if (category == "coats") return du < 0.25 && v > 0.05 && v < 0.97;
    throw std::invalid_argument("unknown category " + std::string(category));
}

double texture(std::string_view composition, std::size_t x, std::size_t y) {
    if (composition == "cotton") return 1.0;
    if (composition == "denim") return (x + y) % 4 < 2 ? 1.0 : kTextureLow;
    if (composition == "wool") return (x / 4 + y / 4) % 2 == 0 ? 1.0 : kTextureLow;
    if (composition == "leather") return y % 4 < 2 ? 1.0 : kTextureLow;
    if (composition == "silk") return x % 4 < 2 ? 1.0 : kTextureLow;
    if (composition == "linen") return (x % 4 == 1 && y % 4 == 1) ? kTextureLow : 1.0;
    throw std::invalid_argument("unknown composition " + std::string(composition));
}

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& options, Rng& rng) {
    return options[rng.below(N)];
}

}  // namespace

std::span<const std::string_view> category_set() { return kCategoryNames; }
std::span<const std::string_view> color_set() { return kColorNames; }
std::span<const std::string_view> composition_set() { return kCompositions; }

GeneratorConfig GeneratorConfig::balanced(std::size_t n, std::size_t categories) {
    if (categories == 0 || categories > kCategories.size())
        throw std::invalid_argument("category count must be in [1, " + std::to_string(kCategories.size()) + "]");
    GeneratorConfig config;
    for (std::size_t c = 0; c < categories; ++c)
        config.category_counts.emplace_back(std::string(kCategories[c].name),
                                            n / categories + (c < n % categories ? 1 : 0));
    return config;
}

std::size_t GeneratorConfig::total() const {
    std::size_t n = 0;
    for (const auto& [name, count] : category_counts) n += count;
    return n;
}

Image render_item_image(std::string_view category, std::string_view composition, std::string_view color,
                        std::size_t size, std::size_t channels) {
    if (channels != 3) throw std::invalid_argument("render_item_image: only 3-channel images are supported");
    const ColorSpec& hue = color_spec(color);
    Image img{size, size, channels, std::vector<float>(size * size * channels)};
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(size);
            const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(size);
            const bool inside = inside_silhouette(category, u, v);
            const double t = inside ? texture(composition, x, y) : 0.0;
            for (std::size_t c = 0; c < channels; ++c)
                img.at(y, x, c) = static_cast<float>(inside ? hue.rgb[c] * t : kBackground);
        }
    }
    return img;
}

std::vector<ItemRecord> generate_corpus(const GeneratorConfig& config, std::uint64_t seed) {
    if (config.total() == 0) throw std::invalid_argument("generate_corpus: zero items requested");
    if (config.patch_size == 0 || config.image_size % config.patch_size != 0)
        throw std::invalid_argument("generate_corpus: image size " + std::to_string(config.image_size) +
                                    " not divisible by patch size " + std::to_string(config.patch_size));

    constexpr std::size_t kCombos = kColors.size() * kCompositions.size();
    std::vector<ItemRecord> items;
    items.reserve(config.total());
    std::size_t index = 0;
    for (std::size_t ci = 0; ci < config.category_counts.size(); ++ci) {
        const auto& [category, count] = config.category_counts[ci];
        const CategorySpec& spec = category_spec(category);
        // Distinct (color, composition) pairs within a category until exhausted.
        Rng combo_rng(Rng::derive_seed(seed, 1'000'000 + ci));
        std::vector<std::size_t> combos;
        while (combos.size() < count) {
            const auto round = combo_rng.sample_without_replacement(kCombos, std::min(kCombos, count - combos.size()));
            combos.insert(combos.end(), round.begin(), round.end());
        }
        for (std::size_t k = 0; k < count; ++k, ++index) {
            Rng rng(Rng::derive_seed(seed, index));
            const std::string_view color = kColors[combos[k] / kCompositions.size()].name;
            const std::string_view composition = kCompositions[combos[k] % kCompositions.size()];

            ItemRecord item;
            char id[32];
            std::snprintf(id, sizeof id, "item-%04zu", index);
            item.id = id;
            const std::string_view adjective = pick(kAdjectives, rng);
            item.attribute(Attribute::title) = std::string(color) + " " + std::string(adjective) + " " +
                                               std::string(composition) + " " + std::string(spec.noun);
            item.attribute(Attribute::category) = std::string(category);
            item.attribute(Attribute::subcategory) = std::string(spec.subcategories[rng.below(2)]);
            item.attribute(Attribute::gender) = std::string(pick(kGenders, rng));
            item.attribute(Attribute::composition) = std::string(composition);
            item.attribute(Attribute::season) = std::string(pick(kSeasons, rng));
            item.description = std::string(pick(kFits, rng)) + " " + std::string(spec.noun) + " in " +
                               std::string(color) + " " + std::string(composition) + " with " +
                               std::string(pick(kDetails, rng));
            item.image = render_item_image(category, composition, color, config.image_size, config.channels);
            items.push_back(std::move(item));
        }
    }
    return items;
}

std::string_view title_color(const ItemRecord& item) {
    const std::string& title = item.attribute(Attribute::title);
    return std::string_view(title).substr(0, title.find(' '));
}

}  // namespace ffae::corpus
