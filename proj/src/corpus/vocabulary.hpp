#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpus/item.hpp"

namespace ffae::corpus {

using TokenId = std::size_t;

// Lowercases, splits on whitespace and detaches trailing '.' and ','.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
public:
    static constexpr std::string_view kPad = "[PAD]";
    static constexpr std::string_view kUnk = "[UNK]";
    static constexpr std::string_view kCls = "[CLS]";
    static constexpr std::string_view kSep = "[SEP]";
    static constexpr std::string_view kMask = "[MASK]";
    static constexpr std::size_t kSpecialCount = 5;

    // Specials take ids 0..4 in the order above; `words` follow in order.
    explicit Vocabulary(std::vector<std::string> words = {});

    std::size_t size() const noexcept { return tokens_.size(); }
    TokenId id(std::string_view token) const;  // kUnk id when absent
    bool contains(std::string_view token) const;
    const std::string& token(TokenId id) const;
    bool is_special(TokenId id) const noexcept { return id < kSpecialCount; }

    static constexpr TokenId pad_id() noexcept { return 0; }
    static constexpr TokenId unk_id() noexcept { return 1; }
    static constexpr TokenId cls_id() noexcept { return 2; }
    static constexpr TokenId sep_id() noexcept { return 3; }
    static constexpr TokenId mask_id() noexcept { return 4; }

    std::span<const std::string> tokens() const noexcept { return tokens_; }

    // One token per line, line number = id.
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
};

// Every word of every description and rendered statement, sorted
// lexicographically after the specials.
Vocabulary build_vocabulary(std::span<const ItemRecord> corpus);

}  // namespace ffae::corpus
