#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "common/rng.hpp"
#include "corpus/generator.hpp"
#include "tokenizer/codebook.hpp"
#include "tokenizer/patches.hpp"

using namespace ffae;
using namespace ffae::tokenizer;

namespace {

corpus::Image ramp_image(std::size_t h, std::size_t w, std::size_t c) {
    corpus::Image img{h, w, c, std::vector<float>(h * w * c)};
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(i) / img.pixels.size();
    return img;
}

std::size_t brute_nearest(std::span<const double> p, const Codebook& cb) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cb.k; ++j) {
        double d = 0;
        for (std::size_t i = 0; i < cb.dim; ++i) d += (p[i] - cb.codes[j * cb.dim + i]) * (p[i] - cb.codes[j * cb.dim + i]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("patches come out in grid order with channels innermost") {
    const auto img = ramp_image(4, 6, 2);
    const auto grid = extract_patches(img, 2);
    CHECK(grid.grid_rows == 2);
    CHECK(grid.grid_cols == 3);
    CHECK(grid.dim() == 8);
    // patch 4 is grid row 1, column 1: pixels y in {2,3}, x in {2,3}
    const auto p = grid.patch(4);
    std::size_t k = 0;
    for (std::size_t dy = 0; dy < 2; ++dy)
        for (std::size_t dx = 0; dx < 2; ++dx)
            for (std::size_t c = 0; c < 2; ++c) CHECK(p[k++] == doctest::Approx(img.at(2 + dy, 2 + dx, c)));
}

TEST_CASE("assemble inverts extract") {
    const auto img = ramp_image(8, 8, 3);
    CHECK(assemble_patches(extract_patches(img, 4)) == img);
}

TEST_CASE("indivisible image sizes are rejected with the dimensions") {
    CHECK_THROWS_WITH_AS(extract_patches(ramp_image(10, 8, 3), 4), doctest::Contains("10"), std::invalid_argument);
    CHECK_THROWS(extract_patches(ramp_image(8, 8, 3), 0));
}

TEST_CASE("codebook recovers well-separated cluster centres") {
    Rng rng(1);
    const std::vector<std::array<double, 2>> centres = {{0, 0}, {10, 0}, {0, 10}, {10, 10}};
    std::vector<double> pts;
    std::vector<std::array<double, 2>> sums(4);
    for (int i = 0; i < 200; ++i) {
        const auto c = static_cast<std::size_t>(i % 4);
        const double x = centres[c][0] + 0.1 * rng.normal(), y = centres[c][1] + 0.1 * rng.normal();
        pts.push_back(x);
        pts.push_back(y);
        sums[c][0] += x;
        sums[c][1] += y;
    }
    const auto cb = train_codebook(pts, 2, {4, 50, 3});
    REQUIRE(cb.k == 4);
    // Each cluster mean has a code within float precision.
    for (const auto& s : sums) {
        const std::vector<double> mean{s[0] / 50, s[1] / 50};
        const auto j = quantize(mean, cb);
        CHECK(cb.code(j)[0] == doctest::Approx(mean[0]).epsilon(1e-5));
        CHECK(cb.code(j)[1] == doctest::Approx(mean[1]).epsilon(1e-5));
    }
}

TEST_CASE("refinement error never increases and codes are distinct") {
    const auto items = corpus::generate_corpus(corpus::GeneratorConfig::balanced(32, 8), 2);
    std::vector<double> pts;
    for (const auto& it : items) {
        const auto g = extract_patches(it.image, 8);
        pts.insert(pts.end(), g.values.begin(), g.values.end());
    }
    const auto cb = train_codebook(pts, 192, {32, 25, 5});
    REQUIRE(cb.error_history.size() >= 2);
    for (std::size_t i = 1; i < cb.error_history.size(); ++i) CHECK(cb.error_history[i] <= cb.error_history[i - 1] + 1e-9);
    for (std::size_t a = 0; a < cb.k; ++a)
        for (std::size_t b = a + 1; b < cb.k; ++b) CHECK(squared_distance(std::vector<double>(cb.code(a).begin(), cb.code(a).end()), cb.code(b)) > 0);
    // Deterministic in the seed.
    CHECK(train_codebook(pts, 192, {32, 25, 5}).codes == cb.codes);
    // Quantization agrees with a brute-force nearest search.
    for (std::size_t i = 0; i < pts.size() / 192; i += 7) {
        const std::span<const double> p(pts.data() + i * 192, 192);
        CHECK(quantize(p, cb) == brute_nearest(p, cb));
    }
}

TEST_CASE("too few distinct patches for K is an error") {
    const std::vector<double> pts{0, 0, 1, 1, 0, 0};
    CHECK_THROWS_AS(train_codebook(pts, 2, {3, 5, 1}), std::invalid_argument);
    CHECK_NOTHROW(train_codebook(pts, 2, {2, 5, 1}));
}

TEST_CASE("quantize breaks ties toward the lower index") {
    Codebook cb;
    cb.k = 2;
    cb.dim = 1;
    cb.codes = {-1.0f, 1.0f};
    CHECK(quantize(std::vector<double>{0.0}, cb) == 0);
    CHECK(quantize(std::vector<double>{0.5}, cb) == 1);
    CHECK_THROWS(quantize(std::vector<double>{0.0, 1.0}, cb));
}

TEST_CASE("codebook file round-trips and labels identically") {
    Rng rng(4);
    std::vector<double> pts(300);
    for (double& x : pts) x = rng.uniform();
    const auto cb = train_codebook(pts, 3, {8, 20, 2});
    const auto path = std::filesystem::temp_directory_path() / "ffae_test.ffvq";
    save_codebook(path, cb);
    const auto back = load_codebook(path);
    CHECK(back.k == cb.k);
    CHECK(back.dim == cb.dim);
    CHECK(back.codes == cb.codes);
    for (std::size_t i = 0; i < 100; ++i) {
        const std::span<const double> p(pts.data() + 3 * i, 3);
        CHECK(quantize(p, back) == quantize(p, cb));
    }
    std::filesystem::remove(path);
    CHECK_THROWS(load_codebook(path));
}
