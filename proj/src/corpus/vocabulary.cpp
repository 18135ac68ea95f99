#include "corpus/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <stdexcept>

#include "corpus/text_input.hpp"

namespace ffae::corpus {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string word;
    const auto flush = [&] {
        std::string trailing;
        while (!word.empty() && (word.back() == '.' || word.back() == ',')) {
            trailing.insert(trailing.begin(), word.back());
            word.pop_back();
        }
        if (!word.empty()) out.push_back(word);
        for (char c : trailing) out.emplace_back(1, c);
        word.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    flush();
    return out;
}

Vocabulary::Vocabulary(std::vector<std::string> words) {
    tokens_ = {std::string(kPad), std::string(kUnk), std::string(kCls), std::string(kSep), std::string(kMask)};
    tokens_.insert(tokens_.end(), std::make_move_iterator(words.begin()), std::make_move_iterator(words.end()));
    for (TokenId i = 0; i < tokens_.size(); ++i)
        if (!ids_.emplace(tokens_[i], i).second)
            throw std::invalid_argument("Vocabulary: duplicate token \"" + tokens_[i] + "\"");
}

TokenId Vocabulary::id(std::string_view token) const {
    const auto it = ids_.find(std::string(token));
    return it == ids_.end() ? unk_id() : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

const std::string& Vocabulary::token(TokenId id) const {
    if (id >= tokens_.size())
        throw std::out_of_range("Vocabulary: id " + std::to_string(id) + " >= size " + std::to_string(size()));
    return tokens_[id];
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write vocabulary " + path.string());
    for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read vocabulary " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    if (lines.size() < kSpecialCount)
        throw std::runtime_error("vocabulary " + path.string() + " is missing special tokens");
    const Vocabulary base;
    for (std::size_t i = 0; i < kSpecialCount; ++i)
        if (lines[i] != base.token(i))
            throw std::runtime_error("vocabulary " + path.string() + ": line " + std::to_string(i + 1) +
                                     " should be " + base.token(i));
    return Vocabulary(std::vector<std::string>(lines.begin() + kSpecialCount, lines.end()));
}

Vocabulary build_vocabulary(std::span<const ItemRecord> corpus) {
    std::set<std::string> words;
    for (const auto& item : corpus) {
        for (auto& w : tokenize(item.description)) words.insert(std::move(w));
        for (Attribute a : kAttributeOrder)
            for (auto& w : tokenize(render_attribute_statement(attribute_name(a), item.attribute(a))))
                words.insert(std::move(w));
    }
    const Vocabulary specials;
    for (const auto& s : specials.tokens()) words.erase(s);
    return Vocabulary(std::vector<std::string>(words.begin(), words.end()));
}

}  // namespace ffae::corpus
