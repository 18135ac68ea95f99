#include "tokenizer/patches.hpp"

#include <stdexcept>
#include <string>

namespace ffae::tokenizer {

PatchGrid extract_patches(const corpus::Image& image, std::size_t patch_size) {
    if (patch_size == 0 || image.height % patch_size != 0 || image.width % patch_size != 0)
        throw std::invalid_argument("extract_patches: H=" + std::to_string(image.height) +
                                    " W=" + std::to_string(image.width) +
                                    " not divisible by p=" + std::to_string(patch_size));
    PatchGrid grid{image.height / patch_size, image.width / patch_size, patch_size, image.channels, {}};
    grid.values.reserve(grid.count() * grid.dim());
    for (std::size_t gr = 0; gr < grid.grid_rows; ++gr)
        for (std::size_t gc = 0; gc < grid.grid_cols; ++gc)
            for (std::size_t dy = 0; dy < patch_size; ++dy)
                for (std::size_t dx = 0; dx < patch_size; ++dx)
                    for (std::size_t c = 0; c < image.channels; ++c)
                        grid.values.push_back(image.at(gr * patch_size + dy, gc * patch_size + dx, c));
    return grid;
}

corpus::Image assemble_patches(const PatchGrid& grid) {
    const std::size_t p = grid.patch_size;
    corpus::Image img{grid.grid_rows * p, grid.grid_cols * p, grid.channels, {}};
    img.pixels.resize(img.height * img.width * img.channels);
    std::size_t k = 0;
    for (std::size_t gr = 0; gr < grid.grid_rows; ++gr)
        for (std::size_t gc = 0; gc < grid.grid_cols; ++gc)
            for (std::size_t dy = 0; dy < p; ++dy)
                for (std::size_t dx = 0; dx < p; ++dx)
                    for (std::size_t c = 0; c < grid.channels; ++c)
                        img.at(gr * p + dy, gc * p + dx, c) = static_cast<float>(grid.values[k++]);
    return img;
}

}  // namespace ffae::tokenizer
