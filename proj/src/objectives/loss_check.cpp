#include "objectives/loss_check.hpp"

#include <algorithm>

#include "corpus/generator.hpp"
#include "tokenizer/codebook.hpp"
#include "tokenizer/patches.hpp"

namespace ffae::objectives {

LossCheckFixture LossCheckFixture::make(std::uint64_t seed, CheckScale scale, double init_std) {
    const bool tiny = scale == CheckScale::tiny;
    auto gen = corpus::GeneratorConfig::balanced(2, 2);
    gen.image_size = tiny ? 16 : 32;
    gen.patch_size = tiny ? 4 : 8;
    const auto records = corpus::generate_corpus(gen, seed);

    std::vector<double> patches;
    for (const auto& r : records) {
        const auto grid = tokenizer::extract_patches(r.image, gen.patch_size);
        patches.insert(patches.end(), grid.values.begin(), grid.values.end());
    }
    const std::size_t dim = gen.patch_size * gen.patch_size * gen.channels;
    std::size_t distinct = 0;
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < patches.size() / dim; ++i)
            rows.emplace_back(patches.begin() + static_cast<std::ptrdiff_t>(i * dim),
                              patches.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
        std::ranges::sort(rows);
        distinct = static_cast<std::size_t>(std::unique(rows.begin(), rows.end()) - rows.begin());
    }
    const auto codebook = tokenizer::train_codebook(
        patches, dim, {std::min<std::size_t>(8, distinct), 10, Rng::derive_seed(seed, 1)});

    LossCheckFixture f;
    f.seed = seed;
    f.vocab = corpus::build_vocabulary(records);
    f.items = prepare_training_items(records, f.vocab, &codebook, gen.patch_size);

    model::ModelConfig mc;
    if (tiny) {
        mc.embed_dim = 8;
        mc.n_layers_text_fusion = 2;
        mc.split_point = 1;
        mc.n_layers_image = 1;
        mc.n_heads = 2;
        mc.mlp_hidden = 16;
    }
    mc.vocab_size = f.vocab.size();
    mc.patch_labels = codebook.k;
    mc.patch_size = gen.patch_size;
    mc.patch_dim = dim;
    mc.patch_count = (gen.image_size / gen.patch_size) * (gen.image_size / gen.patch_size);
    mc.max_text_len = 0;
    for (const auto& it : f.items) mc.max_text_len = std::max(mc.max_text_len, it.text.tokens.size());
    mc.init_std = init_std;
    f.model = std::make_unique<model::FashionModel>(mc, Rng::derive_seed(seed, 2));
    return f;
}

ad::Value LossCheckFixture::loss(Task task) const {
    Rng rng(Rng::derive_seed(seed, 3));
    std::vector<const TrainingItem*> batch;
    for (const auto& it : items) batch.push_back(&it);
    const auto mask_id = corpus::Vocabulary::mask_id();
    switch (task) {
        case Task::aetp: {
            std::vector<MaskedText> masked;
            for (const auto* it : batch) masked.push_back(mask_attributes(it->text, 2, rng, mask_id));
            return loss_aetp(*model, masked, batch);
        }
        case Task::mlm: {
            std::vector<MaskedText> masked;
            for (const auto* it : batch) masked.push_back(mask_subwords(it->text, 0.15, rng, mask_id));
            return loss_mlm(*model, masked, batch);
        }
        case Task::apir: return loss_apir(*model, batch, rng);
        case Task::itc: return loss_itc(*model, batch);
        case Task::itm: return loss_itm(*model, batch, rng);
    }
    return {};
}

ad::GradCheckResult check_task_gradients(Task task, std::uint64_t seed, const ad::GradCheckOptions& options,
                                         CheckScale scale) {
    auto fixture = LossCheckFixture::make(seed, scale);
    auto opts = options;
    opts.seed = Rng::derive_seed(seed, 4);
    return ad::grad_check([&] { return fixture.loss(task); }, fixture.model->parameters(), opts);
}

}  // namespace ffae::objectives
