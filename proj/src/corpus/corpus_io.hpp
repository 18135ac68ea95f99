#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "corpus/item.hpp"
#include "corpus/vocabulary.hpp"

namespace ffae::corpus {

struct CorpusBundle {
    std::vector<ItemRecord> items;
    Vocabulary vocab;
};

// "FFAE" magic, u32 H, W, C, then H*W*C little-endian float32.
void write_image(std::ostream& out, const Image& image);
Image read_image(std::istream& in);

// Directory layout: items.jsonl, images/<id>.ffimg, vocab.txt.
void save_corpus(const std::filesystem::path& dir, std::span<const ItemRecord> items, const Vocabulary& vocab);
CorpusBundle load_corpus(const std::filesystem::path& dir);

}  // namespace ffae::corpus
