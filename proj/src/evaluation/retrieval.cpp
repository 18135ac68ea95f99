#include "evaluation/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <map>
#include <stdexcept>

#include "common/rng.hpp"

namespace ffae::evaluation {

std::string_view direction_name(Direction d) { return d == Direction::i2t ? "i2t" : "t2i"; }
std::string_view protocol_name(Protocol p) { return p == Protocol::full ? "full" : "random_m"; }

Direction parse_direction(std::string_view s) {
    if (s == "i2t") return Direction::i2t;
    if (s == "t2i") return Direction::t2i;
    throw std::invalid_argument("unknown direction \"" + std::string(s) + "\" (expected i2t or t2i)");
}

Protocol parse_protocol(std::string_view s) {
    if (s == "full") return Protocol::full;
    if (s == "random_m") return Protocol::random_m;
    throw std::invalid_argument("unknown protocol \"" + std::string(s) + "\" (expected full or random_m)");
}

Features embed_corpus(const model::FashionModel& model, std::span<const objectives::TrainingItem> items) {
    const std::size_t d = model.config().embed_dim;
    Features f{ad::Tensor(items.size(), d), ad::Tensor(items.size(), d)};
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto out = model.forward_contrastive(items[i].patches, items[i].text.tokens);
        std::ranges::copy(out.pooled_v.value().row(0), f.image.row(i).begin());
        std::ranges::copy(out.pooled_w.value().row(0), f.text.row(i).begin());
    }
    return f;
}

SimilarityMatrix similarity_matrix(const Features& features, std::span<const std::string> ids, Direction direction) {
    const auto& queries = direction == Direction::i2t ? features.image : features.text;
    const auto& candidates = direction == Direction::i2t ? features.text : features.image;
    if (queries.rows() != ids.size() || candidates.rows() != ids.size() || queries.cols() != candidates.cols())
        throw std::invalid_argument("similarity matrix: feature shapes " + queries.shape_string() + " and " +
                                    candidates.shape_string() + " do not match " + std::to_string(ids.size()) +
                                    " ids");
    SimilarityMatrix sim;
    sim.direction = direction;
    sim.query_ids.assign(ids.begin(), ids.end());
    sim.candidate_ids.assign(ids.begin(), ids.end());
    sim.scores = ad::Tensor(ids.size(), ids.size());
    for (std::size_t q = 0; q < ids.size(); ++q) {
        for (std::size_t c = 0; c < ids.size(); ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < queries.cols(); ++k) s += queries(q, k) * candidates(c, k);
            if (!std::isfinite(s)) throw std::runtime_error("similarity matrix: non-finite score for " + ids[q]);
            sim.scores(q, c) = s;
        }
    }
    return sim;
}

void itm_rerank(SimilarityMatrix& sim, const model::FashionModel& model,
                std::span<const objectives::TrainingItem> items, std::size_t top) {
    const std::size_t n = sim.candidate_ids.size();
    top = std::min(top, n);
    if (top == 0) return;
    std::vector<ad::Value> images;
    for (const auto& item : items) images.push_back(model.encode_image(item.patches));
    std::vector<std::size_t> all(n);
    for (std::size_t q = 0; q < sim.query_ids.size(); ++q) {
        for (std::size_t c = 0; c < n; ++c) all[c] = c;
        const auto row = sim.scores.row(q);
        std::ranges::stable_sort(all, [&](std::size_t a, std::size_t b) {
            return row[a] > row[b] || (row[a] == row[b] && sim.candidate_ids[a] < sim.candidate_ids[b]);
        });
        double rest_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = top; i < n; ++i) rest_max = std::max(rest_max, row[all[i]]);
        std::vector<double> fresh(top);
        for (std::size_t i = 0; i < top; ++i) {
            const std::size_t c = all[i];
            const std::size_t image = sim.direction == Direction::i2t ? q : c;
            const std::size_t text = sim.direction == Direction::i2t ? c : q;
            const auto fused = model.forward_fusion(items[text].text.tokens, images[image]);
            const auto logits = model.itm_logits(ad::slice_rows(fused, 0, 1)).value();
            fresh[i] = logits(0, 1) - logits(0, 0);
        }
        const double lowest = *std::ranges::min_element(fresh);
        const double lift = std::isfinite(rest_max) ? std::max(0.0, rest_max - lowest + 1.0) : 0.0;
        for (std::size_t i = 0; i < top; ++i) row[all[i]] = fresh[i] + lift;
    }
}

std::size_t rank_of(std::span<const double> scores, std::span<const std::size_t> candidates, std::size_t truth,
                    std::span<const std::string> candidate_ids) {
    const double t = scores[truth];
    std::size_t rank = 0;
    for (std::size_t c : candidates) {
        if (c == truth) continue;
        if (scores[c] > t || (scores[c] == t && candidate_ids[c] < candidate_ids[truth])) ++rank;
    }
    return rank;
}

double rank_at_k(const SimilarityMatrix& sim, std::span<const std::size_t> truth, std::size_t k) {
    const std::size_t nq = sim.scores.rows(), nc = sim.scores.cols();
    if (truth.size() != nq)
        throw std::invalid_argument("rank_at_k: " + std::to_string(truth.size()) + " ground-truth entries for " +
                                    std::to_string(nq) + " queries");
    if (nq == 0) throw std::invalid_argument("rank_at_k: no queries");
    std::vector<std::size_t> all(nc);
    for (std::size_t c = 0; c < nc; ++c) all[c] = c;
    std::size_t hits = 0;
    for (std::size_t q = 0; q < nq; ++q) {
        if (truth[q] >= nc)
            throw std::invalid_argument("rank_at_k: missing ground truth for query " +
                                        (q < sim.query_ids.size() ? sim.query_ids[q] : std::to_string(q)));
        if (rank_of(sim.scores.row(q), all, truth[q], sim.candidate_ids) < k) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(nq);
}

namespace {

void finish(EvalRun& run, const std::array<std::size_t, 3>& hits) {
    for (std::size_t i = 0; i < 3; ++i)
        run.recalls[i] = run.queries == 0 ? 0.0 : 100.0 * static_cast<double>(hits[i]) / static_cast<double>(run.queries);
    run.mean = (run.recalls[0] + run.recalls[1] + run.recalls[2]) / 3.0;
}

}  // namespace

EvalRun protocol_full(const SimilarityMatrix& sim) {
    EvalRun run;
    run.protocol = Protocol::full;
    run.direction = sim.direction;
    run.m = sim.candidate_ids.size();
    run.queries = sim.query_ids.size();
    std::vector<std::size_t> all(run.m);
    for (std::size_t c = 0; c < run.m; ++c) all[c] = c;
    std::array<std::size_t, 3> hits{};
    for (std::size_t q = 0; q < run.queries; ++q) {
        const auto r = rank_of(sim.scores.row(q), all, q, sim.candidate_ids);
        for (std::size_t i = 0; i < 3; ++i) hits[i] += r < kRankKs[i];
    }
    finish(run, hits);
    return run;
}

EvalRun protocol_full(const Features& features, std::span<const std::string> ids, Direction direction) {
    return protocol_full(similarity_matrix(features, ids, direction));
}

EvalRun protocol_random_m(const SimilarityMatrix& sim, std::span<const std::string> categories, std::size_t m,
                          std::uint64_t seed) {
    if (categories.size() != sim.query_ids.size())
        throw std::invalid_argument("random_m: " + std::to_string(categories.size()) + " categories for " +
                                    std::to_string(sim.query_ids.size()) + " items");
    if (m == 0) throw std::invalid_argument("random_m: M must be >= 1");
    std::map<std::string, std::vector<std::size_t>, std::less<>> members;
    for (std::size_t i = 0; i < categories.size(); ++i) members[categories[i]].push_back(i);

    EvalRun run;
    run.protocol = Protocol::random_m;
    run.direction = sim.direction;
    run.seed = seed;
    run.m = m;
    run.queries = sim.query_ids.size();
    Rng rng(seed);
    std::array<std::size_t, 3> hits{};
    std::vector<std::size_t> pool;
    for (std::size_t q = 0; q < run.queries; ++q) {
        const auto& group = members.find(categories[q])->second;
        std::vector<std::size_t> others;
        for (std::size_t j : group)
            if (j != q) others.push_back(j);
        std::size_t distractors = m - 1;
        if (distractors > others.size()) {
            distractors = others.size();
            ++run.clamped_queries;
        }
        pool.assign(1, q);
        for (std::size_t j : rng.sample_without_replacement(others.size(), distractors)) pool.push_back(others[j]);
        const auto r = rank_of(sim.scores.row(q), pool, q, sim.candidate_ids);
        for (std::size_t i = 0; i < 3; ++i) hits[i] += r < kRankKs[i];
    }
    finish(run, hits);
    return run;
}

EvalRun protocol_random_m(const Features& features, std::span<const std::string> ids,
                          std::span<const std::string> categories, std::size_t m, Direction direction,
                          std::uint64_t seed) {
    return protocol_random_m(similarity_matrix(features, ids, direction), categories, m, seed);
}

std::string to_json(const EvalRun& run) {
    nlohmann::ordered_json j;
    j["protocol"] = protocol_name(run.protocol);
    j["direction"] = direction_name(run.direction);
    j["R@1"] = run.recalls[0];
    j["R@5"] = run.recalls[1];
    j["R@10"] = run.recalls[2];
    j["mean"] = run.mean;
    j["seed"] = run.seed;
    j["M"] = run.m;
    j["queries"] = run.queries;
    j["clamped_queries"] = run.clamped_queries;
    return j.dump();
}

EvalRun eval_run_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        EvalRun run;
        run.protocol = parse_protocol(j.at("protocol").get<std::string>());
        run.direction = parse_direction(j.at("direction").get<std::string>());
        run.recalls = {j.at("R@1").get<double>(), j.at("R@5").get<double>(), j.at("R@10").get<double>()};
        run.mean = j.at("mean").get<double>();
        run.seed = j.at("seed").get<std::uint64_t>();
        run.m = j.at("M").get<std::size_t>();
        run.queries = j.at("queries").get<std::size_t>();
        run.clamped_queries = j.value("clamped_queries", std::size_t{0});
        return run;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("eval run JSON: ") + e.what());
    }
}

}  // namespace ffae::evaluation
