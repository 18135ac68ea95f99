#include "training/finetune.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "autodiff/ops.hpp"
#include "common/rng.hpp"
#include "corpus/text_input.hpp"
#include "evaluation/metrics.hpp"
#include "tokenizer/patches.hpp"
#include "training/adamw.hpp"

namespace ffae::training {

using corpus::Attribute;

namespace {

struct Example {
    std::vector<corpus::TokenId> tokens;
    ad::Tensor patches;
    std::size_t label;
};

std::size_t argmax_row(const ad::Tensor& t, std::size_t r) {
    const auto row = t.row(r);
    return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

FinetuneResult finetune_classifier(model::FashionModel& model, std::span<const corpus::ItemRecord> items,
                                   const corpus::Vocabulary& vocab, const FinetuneConfig& config) {
    if (config.label_field != Attribute::category && config.label_field != Attribute::subcategory)
        throw std::invalid_argument("unknown label field \"" + std::string(corpus::attribute_name(config.label_field)) +
                                    "\" (expected category or subcategory)");
    if (items.empty()) throw std::invalid_argument("fine-tuning needs at least one item");
    if (config.batch_size == 0) throw std::invalid_argument("fine-tuning batch_size must be >= 1");

    FinetuneResult result;
    for (const auto& item : items) result.classes.push_back(item.attribute(config.label_field));
    std::sort(result.classes.begin(), result.classes.end());
    result.classes.erase(std::unique(result.classes.begin(), result.classes.end()), result.classes.end());

    const auto selection = corpus::StatementSelection::all().without(Attribute::category).without(Attribute::subcategory);
    const auto& mc = model.config();
    std::vector<Example> examples;
    for (const auto& item : items) {
        const auto grid = tokenizer::extract_patches(item.image, mc.patch_size);
        const auto label = static_cast<std::size_t>(
            std::lower_bound(result.classes.begin(), result.classes.end(), item.attribute(config.label_field)) -
            result.classes.begin());
        examples.push_back({corpus::build_text_input(item, vocab, selection).tokens,
                            ad::Tensor(grid.count(), grid.dim(), grid.values), label});
        result.labels.push_back(label);
    }

    Rng rng(Rng::derive_seed(config.seed, 5));
    const auto head = ad::Linear::create(result.head, "classifier", mc.embed_dim, result.classes.size(), mc.init_std, rng);

    const auto cls_state = [&](const Example& ex) {
        const auto image = model.encode_image(ex.patches);
        return ad::slice_rows(model.forward_fusion(ex.tokens, image), 0, 1);
    };
    // With a frozen backbone the [CLS] features never change.
    std::vector<ad::Value> frozen;
    if (config.freeze_backbone)
        for (const auto& ex : examples) frozen.push_back(ad::constant(cls_state(ex).value()));

    AdamW head_opt({config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
    AdamW body_opt({config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
    const std::size_t b = std::min(config.batch_size, examples.size());
    for (std::size_t step = 0; step < config.steps; ++step) {
        ad::Value total;
        const auto picks = rng.sample_without_replacement(examples.size(), b);
        for (std::size_t i : picks) {
            const auto feature = config.freeze_backbone ? frozen[i] : cls_state(examples[i]);
            const auto loss = ad::cross_entropy(head(feature), examples[i].label);
            total = total.defined() ? ad::add(total, loss) : loss;
        }
        total = ad::scale(total, 1.0 / static_cast<double>(b));
        result.head.zero_grad();
        if (!config.freeze_backbone) model.parameters().zero_grad();
        total.backward();
        head_opt.step(result.head);
        if (!config.freeze_backbone) body_opt.step(model.parameters());
        result.final_loss = total.item();
    }

    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto feature = config.freeze_backbone ? frozen[i] : cls_state(examples[i]);
        result.predictions.push_back(argmax_row(head(feature).value(), 0));
    }
    const auto metrics = evaluation::classification_metrics(result.predictions, result.labels, result.classes.size());
    result.accuracy = metrics.accuracy;
    result.macro_f1 = metrics.macro_f1;
    return result;
}

}  // namespace ffae::training
