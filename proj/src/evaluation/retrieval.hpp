#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "autodiff/tensor.hpp"
#include "model/fashion_model.hpp"
#include "objectives/objectives.hpp"

namespace ffae::evaluation {

enum class Direction { i2t, t2i };
enum class Protocol { random_m, full };

std::string_view direction_name(Direction d);
std::string_view protocol_name(Protocol p);
Direction parse_direction(std::string_view s);
Protocol parse_protocol(std::string_view s);

inline constexpr std::array<std::size_t, 3> kRankKs = {1, 5, 10};

// Row i of each matrix holds item i's pooled feature.
struct Features {
    ad::Tensor image;  // n x D
    ad::Tensor text;   // n x D
};

Features embed_corpus(const model::FashionModel& model, std::span<const objectives::TrainingItem> items);

struct SimilarityMatrix {
    ad::Tensor scores;  // queries x candidates
    std::vector<std::string> query_ids;
    std::vector<std::string> candidate_ids;
    Direction direction = Direction::i2t;
};

// Dot products of pooled features; I2T queries with images, T2I with texts.
SimilarityMatrix similarity_matrix(const Features& features, std::span<const std::string> ids, Direction direction);

// Replaces the top `top` scores of every query with ITM matched-minus-unmatched
// logits, lifted above all remaining scores so they stay on top.
void itm_rerank(SimilarityMatrix& sim, const model::FashionModel& model,
                std::span<const objectives::TrainingItem> items, std::size_t top);

// 0-based position of `truth` among `candidates` when sorted by descending
// score, ties going to the smaller candidate id.
std::size_t rank_of(std::span<const double> scores, std::span<const std::size_t> candidates, std::size_t truth,
                    std::span<const std::string> candidate_ids);

// Percentage of queries whose truth is among the k best candidates.
// truth[q] indexes a candidate; throws when it is out of range.
double rank_at_k(const SimilarityMatrix& sim, std::span<const std::size_t> truth, std::size_t k);

struct EvalRun {
    Protocol protocol = Protocol::full;
    Direction direction = Direction::i2t;
    std::array<double, 3> recalls{};  // at kRankKs
    double mean = 0.0;
    std::uint64_t seed = 0;
    std::size_t m = 0;  // pool size for random_m, candidate count for full
    std::size_t queries = 0;
    std::size_t clamped_queries = 0;  // random_m queries whose category was smaller than M

    friend bool operator==(const EvalRun&, const EvalRun&) = default;
};

// Candidates are every item; item i's truth is candidate i.
EvalRun protocol_full(const Features& features, std::span<const std::string> ids, Direction direction);
EvalRun protocol_full(const SimilarityMatrix& sim);

// Per query: the true candidate plus M-1 distinct same-category distractors
// drawn without replacement. Pools shrink to the category size when needed.
EvalRun protocol_random_m(const Features& features, std::span<const std::string> ids,
                          std::span<const std::string> categories, std::size_t m, Direction direction,
                          std::uint64_t seed);
EvalRun protocol_random_m(const SimilarityMatrix& sim, std::span<const std::string> categories, std::size_t m,
                          std::uint64_t seed);

std::string to_json(const EvalRun& run);
EvalRun eval_run_from_json(const std::string& json);

}  // namespace ffae::evaluation
