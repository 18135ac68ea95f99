#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpus/item.hpp"
#include "corpus/vocabulary.hpp"

namespace ffae::corpus {

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    std::size_t size() const noexcept { return end - begin; }
    bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
    friend bool operator==(const Span&, const Span&) = default;
};

// Token ids plus where the description and each attribute value sit.
struct TextInput {
    std::vector<TokenId> tokens;
    Span description;
    std::array<std::optional<Span>, kAttributeCount> attribute_spans;

    const std::optional<Span>& span(Attribute a) const { return attribute_spans[static_cast<std::size_t>(a)]; }
    friend bool operator==(const TextInput&, const TextInput&) = default;
};

// Which attribute statements are appended; all six by default.
struct StatementSelection {
    std::array<bool, kAttributeCount> include{true, true, true, true, true, true};

    static StatementSelection all() { return {}; }
    StatementSelection without(Attribute a) const {
        StatementSelection s = *this;
        s.include[static_cast<std::size_t>(a)] = false;
        return s;
    }
    bool includes(Attribute a) const { return include[static_cast<std::size_t>(a)]; }
};

// "The image <attribute> is <value>." Throws on an unknown name or empty value.
std::string render_attribute_statement(std::string_view attribute_name, std::string_view value);
// Inverse of the template; nullopt when the text does not match it.
std::optional<std::pair<std::string, std::string>> parse_attribute_statement(std::string_view statement);

// [CLS] description [SEP] then the selected statements in attribute order.
TextInput build_text_input(const ItemRecord& item, const Vocabulary& vocab,
                           const StatementSelection& selection = StatementSelection::all());

std::vector<std::string> decode(const TextInput& input, const Vocabulary& vocab, const Span& span);

}  // namespace ffae::corpus
