#include "corpus/text_input.hpp"

#include <regex>
#include <stdexcept>

namespace ffae::corpus {

std::string render_attribute_statement(std::string_view attribute_name, std::string_view value) {
    if (!parse_attribute(attribute_name))
        throw std::invalid_argument("unknown attribute name \"" + std::string(attribute_name) + "\"");
    if (value.empty()) throw std::invalid_argument("empty value for attribute " + std::string(attribute_name));
    return "The image " + std::string(attribute_name) + " is " + std::string(value) + ".";
}

std::optional<std::pair<std::string, std::string>> parse_attribute_statement(std::string_view statement) {
    static const std::regex pattern(R"(^The image (\S+) is (\S(?:.*\S)?)\.$)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(statement.begin(), statement.end(), m, pattern)) return std::nullopt;
    return std::pair{m[1].str(), m[2].str()};
}

TextInput build_text_input(const ItemRecord& item, const Vocabulary& vocab, const StatementSelection& selection) {
    const auto description = tokenize(item.description);
    if (description.empty()) throw std::invalid_argument("item " + item.id + " has an empty description");

    TextInput input;
    input.tokens.push_back(vocab.cls_id());
    input.description.begin = input.tokens.size();
    for (const auto& w : description) input.tokens.push_back(vocab.id(w));
    input.description.end = input.tokens.size();
    input.tokens.push_back(vocab.sep_id());

    for (Attribute a : kAttributeOrder) {
        if (!selection.includes(a)) continue;
        const std::string statement = render_attribute_statement(attribute_name(a), item.attribute(a));
        const auto words = tokenize(statement);
        const auto value_words = tokenize(item.attribute(a));
        // "the image <name> is" precedes the value, "." follows it.
        const std::size_t prefix = words.size() - value_words.size() - 1;
        const std::size_t start = input.tokens.size();
        for (const auto& w : words) input.tokens.push_back(vocab.id(w));
        input.attribute_spans[static_cast<std::size_t>(a)] = Span{start + prefix, start + prefix + value_words.size()};
    }
    return input;
}

std::vector<std::string> decode(const TextInput& input, const Vocabulary& vocab, const Span& span) {
    std::vector<std::string> out;
    for (std::size_t i = span.begin; i < span.end; ++i) out.push_back(vocab.token(input.tokens.at(i)));
    return out;
}

}  // namespace ffae::corpus
