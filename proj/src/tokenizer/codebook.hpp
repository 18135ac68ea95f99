#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ffae::tokenizer {

// K code vectors of dimension d. Codes are held at float32 precision so a
// saved and reloaded codebook labels patches identically.
struct Codebook {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<float> codes;  // k x dim
    std::size_t iterations = 0;
    std::uint64_t seed = 0;
    std::vector<double> error_history;  // total squared error after each assignment step

    std::span<const float> code(std::size_t j) const { return {codes.data() + j * dim, dim}; }
};

struct CodebookOptions {
    std::size_t k = 64;
    std::size_t iterations = 25;
    std::uint64_t seed = 0;
};

// Centroid refinement over `patches` (n x dim, row-major). Initial codes are
// K distinct patches drawn with the seed; an emptied cluster takes over the
// point farthest from its current code. Throws when fewer than K distinct
// patches exist.
Codebook train_codebook(std::span<const double> patches, std::size_t dim, const CodebookOptions& options);

// Nearest code by squared Euclidean distance, ties to the lowest index.
std::size_t quantize(std::span<const double> patch, const Codebook& codebook);
double squared_distance(std::span<const double> patch, std::span<const float> code);

// "FFVQ" magic, u32 K, u32 d, then K*d little-endian float32.
void save_codebook(const std::filesystem::path& path, const Codebook& codebook);
Codebook load_codebook(const std::filesystem::path& path);

}  // namespace ffae::tokenizer
