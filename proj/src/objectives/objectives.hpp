#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "autodiff/tensor.hpp"
#include "common/rng.hpp"
#include "corpus/item.hpp"
#include "corpus/text_input.hpp"
#include "model/fashion_model.hpp"
#include "tokenizer/codebook.hpp"

namespace ffae::objectives {

using ad::Value;
using corpus::TokenId;

enum class Task { aetp = 0, apir, itc, mlm, itm };
inline constexpr std::size_t kTaskCount = 5;
inline constexpr std::array<Task, kTaskCount> kAllTasks = {Task::aetp, Task::apir, Task::itc, Task::mlm, Task::itm};

std::string_view task_name(Task t);
std::optional<Task> parse_task(std::string_view name);

// One corpus item with everything the losses consume precomputed.
struct TrainingItem {
    std::string id;
    std::string category;
    corpus::TextInput text;
    ad::Tensor patches;                    // patch_count x patch_dim
    std::vector<std::size_t> patch_labels;  // codebook label per patch
};

// Without a codebook the patch labels stay empty (evaluation, fine-tuning).
std::vector<TrainingItem> prepare_training_items(std::span<const corpus::ItemRecord> items,
                                                 const corpus::Vocabulary& vocab,
                                                 const tokenizer::Codebook* codebook, std::size_t patch_size,
                                                 const corpus::StatementSelection& selection = {});

enum class MaskKind { attribute, subword };

struct MaskedText {
    std::vector<TokenId> tokens;         // masked positions hold the [MASK] id
    std::vector<std::size_t> positions;  // ascending
    std::vector<TokenId> targets;        // original ids at `positions`
    MaskKind kind = MaskKind::subword;
    std::size_t shortfall = 0;  // title words requested but unavailable
    std::optional<corpus::Attribute> chosen_attribute;
};

// N distinct title words plus the full value span of one uniformly chosen
// other attribute present in the text. `forced_attribute` pins that choice.
MaskedText mask_attributes(const corpus::TextInput& text, std::size_t n, Rng& rng, TokenId mask_id,
                           std::optional<corpus::Attribute> forced_attribute = std::nullopt);

// Each description token masked independently with probability `ratio`;
// one uniformly chosen description token is forced when none was drawn.
MaskedText mask_subwords(const corpus::TextInput& text, double ratio, Rng& rng, TokenId mask_id);

std::size_t patch_mask_count(std::size_t patch_count);  // round(0.25 * patch_count)
// Uniformly chosen patch indices in [0, patch_count), ascending.
std::vector<std::size_t> sample_patch_positions(std::size_t patch_count, Rng& rng);

struct MaskedImage {
    Value states;                        // image sequence with masked rows replaced by F
    std::vector<std::size_t> positions;  // sequence rows (patch index + 1, row 0 is v_cls)
    std::vector<std::size_t> targets;    // codebook labels of the original patches
};

MaskedImage mask_patches(const Value& image_states, const Value& fusion_token,
                         std::span<const std::size_t> patch_labels, Rng& rng);
MaskedImage mask_patches_at(const Value& image_states, const Value& fusion_token,
                            std::span<const std::size_t> patch_labels, std::span<const std::size_t> patch_positions);

using Batch = std::span<const TrainingItem* const>;

// Batch losses are the mean over items of each item's mean cross-entropy
// over its masked positions.
Value loss_aetp(const model::FashionModel& model, std::span<const MaskedText> masked, Batch batch);
Value loss_mlm(const model::FashionModel& model, std::span<const MaskedText> masked, Batch batch);

Value loss_apir(const model::FashionModel& model, const MaskedImage& masked, const Value& text_states);
Value loss_apir(const model::FashionModel& model, Batch batch, Rng& rng);

// 1/2 [InfoNCE(v, w) + InfoNCE(w, v)] with s(x, y) = x . y / temperature over
// the rows of two B x D matrices.
Value loss_itc(const Value& pooled_v, const Value& pooled_w, double temperature = 1.0);
Value loss_itc(const model::FashionModel& model, Batch batch, double temperature = 1.0);

struct ItmPair {
    std::size_t text_index;
    bool matched;
};
// Per item: keep its own text with probability 1/2, otherwise a uniformly
// chosen other item's text. Throws for B < 2.
std::vector<ItmPair> sample_itm_pairs(std::size_t batch_size, Rng& rng);
Value loss_itm(const model::FashionModel& model, Batch batch, std::span<const ItmPair> pairs);
Value loss_itm(const model::FashionModel& model, Batch batch, Rng& rng);

struct TaskSchedule {
    std::array<double, kTaskCount> probabilities{0.2, 0.2, 0.2, 0.2, 0.2};
    // AETP and MLM are computed together whenever either is drawn.
    bool simultaneous_aetp_mlm = false;

    static TaskSchedule uniform() { return {}; }
    // Normalizes nonnegative weights; throws if all are zero.
    static TaskSchedule from_weights(const std::array<double, kTaskCount>& weights);
    static TaskSchedule only(Task t);
    double probability(Task t) const { return probabilities[static_cast<std::size_t>(t)]; }
    void validate() const;
};

Task sample_task(const TaskSchedule& schedule, Rng& rng);

}  // namespace ffae::objectives
