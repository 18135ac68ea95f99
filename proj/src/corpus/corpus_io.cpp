#include "corpus/corpus_io.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "common/binary_io.hpp"

namespace ffae::corpus {
namespace fs = std::filesystem;

void write_image(std::ostream& out, const Image& image) {
    io::write_magic(out, "FFAE");
    io::write_u32(out, static_cast<std::uint32_t>(image.height));
    io::write_u32(out, static_cast<std::uint32_t>(image.width));
    io::write_u32(out, static_cast<std::uint32_t>(image.channels));
    for (float p : image.pixels) io::write_f32(out, p);
}

Image read_image(std::istream& in) {
    io::expect_magic(in, "FFAE", "image");
    Image img;
    img.height = io::read_u32(in);
    img.width = io::read_u32(in);
    img.channels = io::read_u32(in);
    img.pixels.resize(img.height * img.width * img.channels);
    for (float& p : img.pixels) p = io::read_f32(in);
    return img;
}

void save_corpus(const fs::path& dir, std::span<const ItemRecord> items, const Vocabulary& vocab) {
    fs::create_directories(dir / "images");
    std::ofstream jsonl(dir / "items.jsonl");
    if (!jsonl) throw std::runtime_error("cannot write " + (dir / "items.jsonl").string());
    for (const auto& item : items) {
        nlohmann::ordered_json attrs;
        for (Attribute a : kAttributeOrder) attrs[std::string(attribute_name(a))] = item.attribute(a);
        nlohmann::ordered_json record;
        record["id"] = item.id;
        record["description"] = item.description;
        record["attributes"] = std::move(attrs);
        jsonl << record.dump() << '\n';

        std::ofstream img(dir / "images" / (item.id + ".ffimg"), std::ios::binary);
        if (!img) throw std::runtime_error("cannot write image for " + item.id);
        write_image(img, item.image);
    }
    vocab.save(dir / "vocab.txt");
}

CorpusBundle load_corpus(const fs::path& dir) {
    std::ifstream jsonl(dir / "items.jsonl");
    if (!jsonl) throw std::runtime_error("cannot read " + (dir / "items.jsonl").string());
    CorpusBundle bundle;
    std::size_t line_no = 0;
    for (std::string line; std::getline(jsonl, line);) {
        ++line_no;
        if (line.empty()) continue;
        ItemRecord item;
        try {
            const auto record = nlohmann::json::parse(line);
            item.id = record.at("id").get<std::string>();
            item.description = record.at("description").get<std::string>();
            for (Attribute a : kAttributeOrder)
                item.attribute(a) = record.at("attributes").at(std::string(attribute_name(a))).get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("items.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
        std::ifstream img(dir / "images" / (item.id + ".ffimg"), std::ios::binary);
        if (!img) throw std::runtime_error("missing image for " + item.id);
        item.image = read_image(img);
        bundle.items.push_back(std::move(item));
    }
    bundle.vocab = Vocabulary::load(dir / "vocab.txt");
    return bundle;
}

}  // namespace ffae::corpus
