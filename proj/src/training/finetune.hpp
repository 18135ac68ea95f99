#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "autodiff/transformer.hpp"
#include "corpus/item.hpp"
#include "corpus/vocabulary.hpp"
#include "model/fashion_model.hpp"

namespace ffae::training {

struct FinetuneConfig {
    corpus::Attribute label_field = corpus::Attribute::category;
    std::size_t steps = 500;
    std::size_t batch_size = 16;
    double lr = 1e-3;
    double weight_decay = 0.0;
    bool freeze_backbone = false;
    std::uint64_t seed = 0;
};

struct FinetuneResult {
    std::vector<std::string> classes;  // sorted label values, index = class id
    ad::ParameterSet head;             // classifier.weight (D x C), classifier.bias
    std::vector<std::size_t> labels;
    std::vector<std::size_t> predictions;  // on the training items after fine-tuning
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double final_loss = 0.0;
};

// Linear head over the fused [CLS] state, trained with cross-entropy. The
// text keeps every statement except category and subcategory so the label is
// never spelled out in the input. Throws for label fields other than
// category and subcategory.
FinetuneResult finetune_classifier(model::FashionModel& model, std::span<const corpus::ItemRecord> items,
                                   const corpus::Vocabulary& vocab, const FinetuneConfig& config);

}  // namespace ffae::training
