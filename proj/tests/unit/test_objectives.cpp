#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "autodiff/ops.hpp"
#include "corpus/generator.hpp"
#include "objectives/loss_check.hpp"
#include "objectives/objectives.hpp"

using namespace ffae;
using namespace ffae::objectives;
using corpus::Attribute;

namespace {

constexpr auto kMask = corpus::Vocabulary::mask_id();

struct Setup {
    corpus::Vocabulary vocab;
    std::vector<corpus::ItemRecord> records;
    std::vector<corpus::TextInput> texts;
};

const Setup& setup() {
    static const Setup s = [] {
        Setup s;
        s.records = corpus::generate_corpus(corpus::GeneratorConfig::balanced(8, 4), 11);
        s.vocab = corpus::build_vocabulary(s.records);
        for (const auto& r : s.records) s.texts.push_back(corpus::build_text_input(r, s.vocab));
        return s;
    }();
    return s;
}

double itc_oracle(const ad::Tensor& v, const ad::Tensor& w, double t) {
    const std::size_t b = v.rows();
    std::vector<std::vector<double>> s(b, std::vector<double>(b));
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j) {
            for (std::size_t k = 0; k < v.cols(); ++k) s[i][j] += v(i, k) * w(j, k);
            s[i][j] /= t;
        }
    double v2w = 0, w2v = 0;
    for (std::size_t i = 0; i < b; ++i) {
        double zr = 0, zc = 0;
        for (std::size_t j = 0; j < b; ++j) {
            zr += std::exp(s[i][j]);
            zc += std::exp(s[j][i]);
        }
        v2w += std::log(zr) - s[i][i];
        w2v += std::log(zc) - s[i][i];
    }
    return 0.5 * (v2w + w2v) / b;
}

}  // namespace

TEST_CASE("task names round-trip") {
    for (auto t : kAllTasks) CHECK(parse_task(task_name(t)) == t);
    CHECK_FALSE(parse_task("nope"));
}

TEST_CASE("attribute masking takes two title words plus one full other span") {
    Rng rng(1);
    const auto& s = setup();
    for (int trial = 0; trial < 200; ++trial) {
        const auto& text = s.texts[trial % s.texts.size()];
        const auto m = mask_attributes(text, 2, rng, kMask);
        REQUIRE(m.chosen_attribute);
        CHECK(*m.chosen_attribute != Attribute::title);
        const auto title = *text.span(Attribute::title);
        const auto other = *text.span(*m.chosen_attribute);
        const auto in_title = std::count_if(m.positions.begin(), m.positions.end(), [&](auto p) { return title.contains(p); });
        CHECK(in_title == 2);
        CHECK(m.positions.size() == 2 + other.size());
        for (std::size_t p = other.begin; p < other.end; ++p)
            CHECK(std::find(m.positions.begin(), m.positions.end(), p) != m.positions.end());
        CHECK(std::is_sorted(m.positions.begin(), m.positions.end()));
        CHECK(m.shortfall == 0);
        for (std::size_t i = 0; i < m.positions.size(); ++i) {
            CHECK(m.tokens[m.positions[i]] == kMask);
            CHECK(m.targets[i] == text.tokens[m.positions[i]]);
        }
        CHECK(std::count(m.tokens.begin(), m.tokens.end(), kMask) == static_cast<long>(m.positions.size()));
    }
}

TEST_CASE("attribute masking with a short title records the shortfall") {
    corpus::TextInput text;
    text.tokens = {2, 10, 11, 3, 12, 13};
    text.description = {1, 3};
    text.attribute_spans[static_cast<std::size_t>(Attribute::title)] = corpus::Span{4, 5};
    text.attribute_spans[static_cast<std::size_t>(Attribute::season)] = corpus::Span{5, 6};
    Rng rng(2);
    const auto m = mask_attributes(text, 2, rng, kMask);
    CHECK(m.shortfall == 1);
    CHECK(m.positions == std::vector<std::size_t>{4, 5});
    CHECK(m.chosen_attribute == Attribute::season);
    CHECK_THROWS(mask_attributes(text, 2, rng, kMask, Attribute::gender));
    CHECK(mask_attributes(text, 1, rng, kMask, Attribute::season).positions == std::vector<std::size_t>{4, 5});
}

TEST_CASE("subword masking stays in the description and hits the ratio") {
    Rng rng(3);
    const auto& text = setup().texts[0];
    std::size_t hits = 0, draws = 0;
    for (int i = 0; i < 4000; ++i) {
        const auto m = mask_subwords(text, 0.15, rng, kMask);
        CHECK_FALSE(m.positions.empty());
        for (auto p : m.positions) CHECK(text.description.contains(p));
        hits += m.positions.size();
        draws += text.description.size();
    }
    // A forced token when none is drawn nudges the rate up slightly.
    const double rate = double(hits) / double(draws);
    const double forced = std::pow(0.85, double(text.description.size())) / double(text.description.size());
    CHECK(std::abs(rate - (0.15 + forced)) < 0.01);
}

TEST_CASE("patch masking picks round(25%) distinct patches") {
    CHECK(patch_mask_count(16) == 4);
    CHECK(patch_mask_count(4) == 1);
    CHECK(patch_mask_count(10) == 3);  // 2.5 rounds away from zero
    CHECK(patch_mask_count(64) == 16);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const auto p = sample_patch_positions(16, rng);
        CHECK(p.size() == 4);
        CHECK(std::adjacent_find(p.begin(), p.end()) == p.end());
        CHECK(std::is_sorted(p.begin(), p.end()));
        CHECK(p.back() < 16);
    }
    CHECK_THROWS(sample_patch_positions(3, rng));
}

TEST_CASE("masked image rows are replaced by the fusion token, the rest untouched") {
    Rng rng(5);
    ad::Tensor states(5, 3);
    for (double& x : states.data()) x = rng.normal();
    const auto f = ad::constant(ad::Tensor(1, 3, 7.0));
    const std::vector<std::size_t> labels{4, 5, 6, 7};
    const std::vector<std::size_t> where{0, 2};
    const auto m = mask_patches_at(ad::constant(states), f, labels, where);
    CHECK(m.positions == std::vector<std::size_t>{1, 3});
    CHECK(m.targets == std::vector<std::size_t>{4, 6});
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(m.states.value()(r, c) == ((r == 1 || r == 3) ? 7.0 : states(r, c)));
    CHECK_THROWS(mask_patches_at(ad::constant(states), f, std::vector<std::size_t>{1, 2}, where));
}

TEST_CASE("ITC anchors and oracle agreement") {
    // B = 1: the only candidate is the positive.
    Rng rng(6);
    ad::Tensor v1(1, 4), w1(1, 4);
    for (double& x : v1.data()) x = rng.normal();
    for (double& x : w1.data()) x = rng.normal();
    CHECK(loss_itc(ad::constant(v1), ad::constant(w1)).item() == 0.0);
    // B = 2 with all similarities equal.
    const ad::Tensor ones(2, 3, 1.0);
    CHECK(std::abs(loss_itc(ad::constant(ones), ad::constant(ones)).item() - std::log(2.0)) <= 1e-9);
    // Random batch against the explicit double sum.
    for (double t : {1.0, 0.07}) {
        ad::Tensor v(5, 4), w(5, 4);
        for (double& x : v.data()) x = 0.5 * rng.normal();
        for (double& x : w.data()) x = 0.5 * rng.normal();
        CHECK(loss_itc(ad::constant(v), ad::constant(w), t).item() == doctest::Approx(itc_oracle(v, w, t)).epsilon(1e-12));
    }
    CHECK_THROWS(loss_itc(ad::constant(v1), ad::constant(ones)));
    CHECK_THROWS(loss_itc(ad::constant(v1), ad::constant(w1), 0.0));
}

TEST_CASE("ITM pairs keep the true text half the time and never pick themselves as negatives") {
    Rng rng(7);
    std::size_t matched = 0, total = 0;
    std::map<std::size_t, std::size_t> negatives_for_0;
    for (int i = 0; i < 5000; ++i) {
        const auto pairs = sample_itm_pairs(4, rng);
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            ++total;
            if (pairs[k].matched) {
                ++matched;
                CHECK(pairs[k].text_index == k);
            } else {
                CHECK(pairs[k].text_index != k);
                if (k == 0) ++negatives_for_0[pairs[k].text_index];
            }
        }
    }
    CHECK(std::abs(double(matched) / total - 0.5) < 0.02);
    std::size_t neg_total = 0;
    for (auto [j, n] : negatives_for_0) neg_total += n;
    for (auto [j, n] : negatives_for_0) CHECK(std::abs(double(n) / neg_total - 1.0 / 3.0) < 0.03);
    CHECK_THROWS(sample_itm_pairs(1, rng));
}

TEST_CASE("task sampling follows the schedule and skips zero-probability tasks") {
    Rng rng(8);
    const auto sched = TaskSchedule::from_weights({1, 0, 2, 0, 1});
    std::map<Task, int> counts;
    for (int i = 0; i < 20000; ++i) ++counts[sample_task(sched, rng)];
    CHECK(counts[Task::apir] == 0);
    CHECK(counts[Task::mlm] == 0);
    CHECK(std::abs(counts[Task::itc] / 20000.0 - 0.5) < 0.02);
    CHECK(std::abs(counts[Task::aetp] / 20000.0 - 0.25) < 0.02);
    for (int i = 0; i < 100; ++i) CHECK(sample_task(TaskSchedule::only(Task::itm), rng) == Task::itm);
    CHECK_THROWS(TaskSchedule::from_weights({0, 0, 0, 0, 0}));
    CHECK_THROWS(TaskSchedule::from_weights({1, -1, 0, 0, 0}));
}

TEST_CASE("batch losses are the mean of the per-item losses") {
    const auto fx = LossCheckFixture::make(3);
    const std::vector<const TrainingItem*> both{&fx.items[0], &fx.items[1]};
    Rng rng(9);
    std::vector<MaskedText> masks;
    for (const auto* it : both) masks.push_back(mask_attributes(it->text, 2, rng, kMask));
    const double joint = loss_aetp(*fx.model, masks, both).item();
    double single = 0;
    for (std::size_t i = 0; i < 2; ++i) {
        const std::vector<const TrainingItem*> one{both[i]};
        single += loss_aetp(*fx.model, std::span(&masks[i], 1), one).item();
    }
    CHECK(joint == doctest::Approx(single / 2).epsilon(1e-12));
    // The wrong mask kind is rejected.
    std::vector<MaskedText> sub;
    for (const auto* it : both) sub.push_back(mask_subwords(it->text, 0.15, rng, kMask));
    CHECK_THROWS(loss_aetp(*fx.model, sub, both));
    CHECK_NOTHROW(loss_mlm(*fx.model, sub, both));
}

TEST_CASE("APIR needs patch labels") {
    const auto fx = LossCheckFixture::make(4);
    auto item = fx.items[0];
    item.patch_labels.clear();
    const std::vector<const TrainingItem*> batch{&item};
    Rng rng(1);
    CHECK_THROWS(loss_apir(*fx.model, batch, rng));
}

TEST_CASE("every loss matches finite differences on the tiny model") {
    for (auto t : kAllTasks) {
        CAPTURE(task_name(t));
        for (std::uint64_t seed : {1u, 2u}) CHECK(check_task_gradients(t, seed).max_relative_error < 1e-3);
    }
}
