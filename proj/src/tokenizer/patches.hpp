#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "corpus/item.hpp"

namespace ffae::tokenizer {

// Non-overlapping p x p patches in row-major grid order. Each patch vector is
// flattened (dy, dx, channel) with channel innermost.
struct PatchGrid {
    std::size_t grid_rows = 0;
    std::size_t grid_cols = 0;
    std::size_t patch_size = 0;
    std::size_t channels = 0;
    std::vector<double> values;  // count() x dim()

    std::size_t count() const noexcept { return grid_rows * grid_cols; }
    std::size_t dim() const noexcept { return patch_size * patch_size * channels; }
    std::span<const double> patch(std::size_t i) const { return {values.data() + i * dim(), dim()}; }
};

PatchGrid extract_patches(const corpus::Image& image, std::size_t patch_size);
corpus::Image assemble_patches(const PatchGrid& grid);

}  // namespace ffae::tokenizer
