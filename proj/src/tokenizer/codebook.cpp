#include "tokenizer/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "common/binary_io.hpp"
#include "common/rng.hpp"

namespace ffae::tokenizer {
namespace {

double squared_distance_d(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

// Indices of the first occurrence of each distinct patch, in input order.
std::vector<std::size_t> distinct_patches(std::span<const double> patches, std::size_t n, std::size_t dim) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    const auto row = [&](std::size_t i) { return patches.subspan(i * dim, dim); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = row(a);
        const auto rb = row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    std::vector<std::size_t> firsts;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            const auto a = row(order[i - 1]);
            const auto b = row(order[i]);
            if (std::equal(a.begin(), a.end(), b.begin())) continue;
        }
        firsts.push_back(order[i]);
    }
    std::sort(firsts.begin(), firsts.end());
    return firsts;
}

}  // namespace

double squared_distance(std::span<const double> patch, std::span<const float> code) {
    double d = 0.0;
    for (std::size_t i = 0; i < patch.size(); ++i) {
        const double diff = patch[i] - static_cast<double>(code[i]);
        d += diff * diff;
    }
    return d;
}

std::size_t quantize(std::span<const double> patch, const Codebook& codebook) {
    if (patch.size() != codebook.dim)
        throw std::invalid_argument("quantize: patch length " + std::to_string(patch.size()) +
                                    " != codebook dim " + std::to_string(codebook.dim));
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < codebook.k; ++j) {
        const double d = squared_distance(patch, codebook.code(j));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

Codebook train_codebook(std::span<const double> patches, std::size_t dim, const CodebookOptions& options) {
    if (dim == 0 || patches.size() % dim != 0)
        throw std::invalid_argument("train_codebook: patch buffer is not a multiple of dim");
    if (options.k == 0) throw std::invalid_argument("train_codebook: K must be >= 1");
    const std::size_t n = patches.size() / dim;
    const auto row = [&](std::size_t i) { return patches.subspan(i * dim, dim); };

    const auto distinct = distinct_patches(patches, n, dim);
    if (distinct.size() < options.k)
        throw std::invalid_argument("train_codebook: " + std::to_string(distinct.size()) +
                                    " distinct patches, fewer than K=" + std::to_string(options.k));

    Rng rng(options.seed);
    std::vector<double> centroids(options.k * dim);
    const auto picks = rng.sample_without_replacement(distinct.size(), options.k);
    for (std::size_t j = 0; j < options.k; ++j) {
        const auto src = row(distinct[picks[j]]);
        std::copy(src.begin(), src.end(), centroids.begin() + j * dim);
    }
    const auto centroid = [&](std::size_t j) { return std::span<double>(centroids.data() + j * dim, dim); };

    Codebook book;
    book.k = options.k;
    book.dim = dim;
    book.seed = options.seed;

    std::vector<std::size_t> assignment(n, 0);
    std::vector<double> distance(n, 0.0);
    std::vector<std::size_t> counts(options.k);
    for (std::size_t it = 0; it < options.iterations; ++it) {
        bool changed = it == 0;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < options.k; ++j) {
                const double d = squared_distance_d(row(i), centroid(j));
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            changed = changed || assignment[i] != best;
            assignment[i] = best;
            distance[i] = best_d;
            total += best_d;
        }
        book.error_history.push_back(total);
        book.iterations = it + 1;

        std::fill(counts.begin(), counts.end(), 0);
        std::fill(centroids.begin(), centroids.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assignment[i]];
            auto c = centroid(assignment[i]);
            const auto x = row(i);
            for (std::size_t d = 0; d < dim; ++d) c[d] += x[d];
        }
        for (std::size_t j = 0; j < options.k; ++j) {
            if (counts[j] == 0) continue;
            for (double& v : centroid(j)) v /= static_cast<double>(counts[j]);
        }
        // Empty clusters take the farthest point that is not alone in its cluster.
        for (std::size_t j = 0; j < options.k; ++j) {
            if (counts[j] != 0) continue;
            std::size_t far = n;
            for (std::size_t i = 0; i < n; ++i)
                if (counts[assignment[i]] > 1 && (far == n || distance[i] > distance[far])) far = i;
            if (far == n) break;
            const std::size_t donor = assignment[far];
            auto dc = centroid(donor);
            const auto x = row(far);
            for (std::size_t d = 0; d < dim; ++d)
                dc[d] = (dc[d] * static_cast<double>(counts[donor]) - x[d]) / static_cast<double>(counts[donor] - 1);
            --counts[donor];
            std::copy(x.begin(), x.end(), centroid(j).begin());
            counts[j] = 1;
            assignment[far] = j;
            distance[far] = 0.0;
        }
        if (!changed) break;
    }

    book.codes.assign(centroids.begin(), centroids.end());
    for (std::size_t a = 0; a < book.k; ++a)
        for (std::size_t b = a + 1; b < book.k; ++b)
            if (std::equal(book.code(a).begin(), book.code(a).end(), book.code(b).begin()))
                throw std::runtime_error("train_codebook: codes " + std::to_string(a) + " and " + std::to_string(b) +
                                         " coincide");
    return book;
}

void save_codebook(const std::filesystem::path& path, const Codebook& codebook) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write codebook " + path.string());
    io::write_magic(out, "FFVQ");
    io::write_u32(out, static_cast<std::uint32_t>(codebook.k));
    io::write_u32(out, static_cast<std::uint32_t>(codebook.dim));
    for (float v : codebook.codes) io::write_f32(out, v);
}

Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read codebook " + path.string());
    io::expect_magic(in, "FFVQ", path.string());
    Codebook book;
    book.k = io::read_u32(in);
    book.dim = io::read_u32(in);
    if (book.k == 0) throw std::runtime_error("codebook " + path.string() + " has K = 0");
    book.codes.resize(book.k * book.dim);
    for (float& v : book.codes) v = io::read_f32(in);
    for (float v : book.codes)
        if (!std::isfinite(v)) throw std::runtime_error("codebook " + path.string() + " has non-finite codes");
    return book;
}

}  // namespace ffae::tokenizer
