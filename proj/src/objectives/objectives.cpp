#include "objectives/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "autodiff/ops.hpp"
#include "tokenizer/patches.hpp"

namespace ffae::objectives {

using corpus::Attribute;

std::string_view task_name(Task t) {
    switch (t) {
        case Task::aetp: return "aetp";
        case Task::apir: return "apir";
        case Task::itc: return "itc";
        case Task::mlm: return "mlm";
        case Task::itm: return "itm";
    }
    return "unknown";
}

std::optional<Task> parse_task(std::string_view name) {
    for (Task t : kAllTasks)
        if (task_name(t) == name) return t;
    return std::nullopt;
}

std::vector<TrainingItem> prepare_training_items(std::span<const corpus::ItemRecord> items,
                                                 const corpus::Vocabulary& vocab,
                                                 const tokenizer::Codebook* codebook, std::size_t patch_size,
                                                 const corpus::StatementSelection& selection) {
    std::vector<TrainingItem> out;
    out.reserve(items.size());
    for (const auto& item : items) {
        const auto grid = tokenizer::extract_patches(item.image, patch_size);
        if (codebook && grid.dim() != codebook->dim)
            throw std::invalid_argument("patch dim " + std::to_string(grid.dim()) + " != codebook dim " +
                                        std::to_string(codebook->dim));
        TrainingItem t;
        t.id = item.id;
        t.category = item.attribute(Attribute::category);
        t.text = corpus::build_text_input(item, vocab, selection);
        t.patches = ad::Tensor(grid.count(), grid.dim(), grid.values);
        if (codebook)
            for (std::size_t i = 0; i < grid.count(); ++i)
                t.patch_labels.push_back(tokenizer::quantize(grid.patch(i), *codebook));
        out.push_back(std::move(t));
    }
    return out;
}

namespace {

MaskedText finish_mask(const corpus::TextInput& text, std::vector<std::size_t> positions, TokenId mask_id,
                       MaskKind kind) {
    std::sort(positions.begin(), positions.end());
    MaskedText m;
    m.kind = kind;
    m.tokens = text.tokens;
    for (std::size_t p : positions) {
        m.targets.push_back(text.tokens[p]);
        m.tokens[p] = mask_id;
    }
    m.positions = std::move(positions);
    return m;
}

Value mean_of(std::span<const Value> losses) {
    return ad::scale(ad::sum(ad::concat_rows(losses)), 1.0 / static_cast<double>(losses.size()));
}

void check_batch(Batch batch, std::size_t masks, const char* what) {
    if (batch.empty()) throw std::invalid_argument(std::string(what) + ": empty batch");
    if (masks != batch.size()) throw std::invalid_argument(std::string(what) + ": masks and batch differ in size");
}

Value masked_text_loss(const model::FashionModel& model, std::span<const MaskedText> masked, Batch batch,
                       MaskKind kind, const char* what) {
    check_batch(batch, masked.size(), what);
    std::vector<Value> per_item;
    per_item.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const MaskedText& m = masked[i];
        if (m.kind != kind) throw std::invalid_argument(std::string(what) + ": wrong mask kind");
        if (m.positions.empty()) throw std::invalid_argument(std::string(what) + ": no masked positions");
        const Value image = model.encode_image(batch[i]->patches);
        const Value fused = model.forward_fusion(m.tokens, image);
        const Value logits = model.text_logits(ad::gather_rows(fused, m.positions));
        per_item.push_back(ad::cross_entropy(logits, m.targets));
    }
    return mean_of(per_item);
}

}  // namespace

MaskedText mask_attributes(const corpus::TextInput& text, std::size_t n, Rng& rng, TokenId mask_id,
                           std::optional<Attribute> forced_attribute) {
    std::vector<std::size_t> positions;
    std::size_t shortfall = n;
    if (const auto& title = text.span(Attribute::title)) {
        const std::size_t take = std::min(n, title->size());
        for (std::size_t k : rng.sample_without_replacement(title->size(), take)) positions.push_back(title->begin + k);
        shortfall = n - take;
    }
    std::vector<Attribute> others;
    for (Attribute a : corpus::kAttributeOrder)
        if (a != Attribute::title && text.span(a)) others.push_back(a);
    std::optional<Attribute> chosen;
    if (forced_attribute) {
        if (*forced_attribute == Attribute::title || !text.span(*forced_attribute))
            throw std::invalid_argument("mask_attributes: forced attribute is not a maskable non-title attribute");
        chosen = forced_attribute;
    } else if (!others.empty()) {
        chosen = others[rng.below(others.size())];
    }
    if (chosen) {
        const auto& s = *text.span(*chosen);
        for (std::size_t p = s.begin; p < s.end; ++p) positions.push_back(p);
    }
    MaskedText m = finish_mask(text, std::move(positions), mask_id, MaskKind::attribute);
    m.shortfall = shortfall;
    m.chosen_attribute = chosen;
    return m;
}

MaskedText mask_subwords(const corpus::TextInput& text, double ratio, Rng& rng, TokenId mask_id) {
    if (text.tokens.size() < 2) throw std::invalid_argument("mask_subwords: sequence shorter than 2");
    const auto& d = text.description;
    if (d.size() == 0) throw std::invalid_argument("mask_subwords: empty description span");
    std::vector<std::size_t> positions;
    for (std::size_t p = d.begin; p < d.end; ++p)
        if (rng.bernoulli(ratio)) positions.push_back(p);
    if (positions.empty()) positions.push_back(d.begin + rng.below(d.size()));
    return finish_mask(text, std::move(positions), mask_id, MaskKind::subword);
}

std::size_t patch_mask_count(std::size_t patch_count) {
    return static_cast<std::size_t>(std::lround(0.25 * static_cast<double>(patch_count)));
}

std::vector<std::size_t> sample_patch_positions(std::size_t patch_count, Rng& rng) {
    if (patch_count < 4) throw std::invalid_argument("mask_patches: need at least 4 patches");
    auto picks = rng.sample_without_replacement(patch_count, patch_mask_count(patch_count));
    std::sort(picks.begin(), picks.end());
    return picks;
}

MaskedImage mask_patches_at(const Value& image_states, const Value& fusion_token,
                            std::span<const std::size_t> patch_labels, std::span<const std::size_t> patch_positions) {
    if (image_states.rows() != patch_labels.size() + 1)
        throw std::invalid_argument("mask_patches: " + std::to_string(image_states.rows()) + " image rows for " +
                                    std::to_string(patch_labels.size()) + " patch labels");
    MaskedImage m;
    for (std::size_t p : patch_positions) {
        m.positions.push_back(p + 1);
        m.targets.push_back(patch_labels[p]);
    }
    m.states = ad::replace_rows(image_states, m.positions, fusion_token);
    return m;
}

MaskedImage mask_patches(const Value& image_states, const Value& fusion_token,
                         std::span<const std::size_t> patch_labels, Rng& rng) {
    const auto picks = sample_patch_positions(patch_labels.size(), rng);
    return mask_patches_at(image_states, fusion_token, patch_labels, picks);
}

Value loss_aetp(const model::FashionModel& model, std::span<const MaskedText> masked, Batch batch) {
    return masked_text_loss(model, masked, batch, MaskKind::attribute, "loss_aetp");
}

Value loss_mlm(const model::FashionModel& model, std::span<const MaskedText> masked, Batch batch) {
    return masked_text_loss(model, masked, batch, MaskKind::subword, "loss_mlm");
}

Value loss_apir(const model::FashionModel& model, const MaskedImage& masked, const Value& text_states) {
    if (masked.positions.empty()) throw std::invalid_argument("loss_apir: no masked patches");
    const Value logits = model.forward_reconstruction(text_states, masked.states, masked.positions);
    return ad::cross_entropy(logits, masked.targets);
}

Value loss_apir(const model::FashionModel& model, Batch batch, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("loss_apir: empty batch");
    std::vector<Value> per_item;
    for (const TrainingItem* item : batch) {
        const Value image = model.encode_image(item->patches);
        const Value text = model.text_encoder_states(item->text.tokens, model.config().split_point);
        const Value f = model.fusion_token(ad::slice_rows(image, 0, 1), ad::slice_rows(text, 0, 1));
        const MaskedImage masked = mask_patches(image, f, item->patch_labels, rng);
        per_item.push_back(loss_apir(model, masked, text));
    }
    return mean_of(per_item);
}

Value loss_itc(const Value& pooled_v, const Value& pooled_w, double temperature) {
    if (pooled_v.rows() != pooled_w.rows() || pooled_v.cols() != pooled_w.cols())
        throw std::invalid_argument("loss_itc: pooled feature shapes differ " + pooled_v.value().shape_string() +
                                    " vs " + pooled_w.value().shape_string());
    if (pooled_v.rows() == 0) throw std::invalid_argument("loss_itc: empty batch");
    if (!(temperature > 0.0)) throw std::invalid_argument("loss_itc: temperature must be positive");
    const Value sim = ad::scale(ad::matmul(pooled_v, ad::transpose(pooled_w)), 1.0 / temperature);
    std::vector<std::size_t> diag(pooled_v.rows());
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = i;
    const Value v2w = ad::cross_entropy(sim, diag);
    const Value w2v = ad::cross_entropy(ad::transpose(sim), diag);
    return ad::scale(ad::add(v2w, w2v), 0.5);
}

Value loss_itc(const model::FashionModel& model, Batch batch, double temperature) {
    if (batch.empty()) throw std::invalid_argument("loss_itc: empty batch");
    std::vector<Value> pv;
    std::vector<Value> pw;
    for (const TrainingItem* item : batch) {
        auto out = model.forward_contrastive(item->patches, item->text.tokens);
        pv.push_back(out.pooled_v);
        pw.push_back(out.pooled_w);
    }
    return loss_itc(ad::concat_rows(pv), ad::concat_rows(pw), temperature);
}

std::vector<ItmPair> sample_itm_pairs(std::size_t batch_size, Rng& rng) {
    if (batch_size < 2) throw std::invalid_argument("loss_itm: batch size must be >= 2");
    std::vector<ItmPair> pairs;
    pairs.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        if (rng.bernoulli(0.5)) {
            pairs.push_back({i, true});
        } else {
            std::size_t j = rng.below(batch_size - 1);
            if (j >= i) ++j;
            pairs.push_back({j, false});
        }
    }
    return pairs;
}

Value loss_itm(const model::FashionModel& model, Batch batch, std::span<const ItmPair> pairs) {
    if (batch.size() < 2) throw std::invalid_argument("loss_itm: batch size must be >= 2");
    if (pairs.size() != batch.size()) throw std::invalid_argument("loss_itm: one pair per item required");
    std::vector<Value> per_item;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (pairs[i].text_index >= batch.size()) throw std::out_of_range("loss_itm: text index outside the batch");
        const Value image = model.encode_image(batch[i]->patches);
        const Value fused = model.forward_fusion(batch[pairs[i].text_index]->text.tokens, image);
        const Value logits = model.itm_logits(ad::slice_rows(fused, 0, 1));
        per_item.push_back(ad::cross_entropy(logits, pairs[i].matched ? 1 : 0));
    }
    return mean_of(per_item);
}

Value loss_itm(const model::FashionModel& model, Batch batch, Rng& rng) {
    const auto pairs = sample_itm_pairs(batch.size(), rng);
    return loss_itm(model, batch, pairs);
}

TaskSchedule TaskSchedule::from_weights(const std::array<double, kTaskCount>& weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("task weights must be finite and >= 0");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("task weights are all zero");
    TaskSchedule s;
    for (std::size_t i = 0; i < kTaskCount; ++i) s.probabilities[i] = weights[i] / total;
    return s;
}

TaskSchedule TaskSchedule::only(Task t) {
    std::array<double, kTaskCount> w{};
    w[static_cast<std::size_t>(t)] = 1.0;
    return from_weights(w);
}

void TaskSchedule::validate() const {
    double total = 0.0;
    for (double p : probabilities) {
        if (!(p >= 0.0)) throw std::invalid_argument("task probabilities must be >= 0");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("task probabilities must sum to 1");
}

Task sample_task(const TaskSchedule& schedule, Rng& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < kTaskCount; ++i) {
        if (schedule.probabilities[i] <= 0.0) continue;
        last_positive = i;
        cumulative += schedule.probabilities[i];
        if (u < cumulative) return kAllTasks[i];
    }
    return kAllTasks[last_positive];
}

}  // namespace ffae::objectives
