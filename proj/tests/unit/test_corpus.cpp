#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "corpus/corpus_io.hpp"
#include "corpus/generator.hpp"
#include "corpus/text_input.hpp"
#include "corpus/vocabulary.hpp"

using namespace ffae::corpus;

namespace {

bool in_set(std::span<const std::string_view> set, const std::string& v) {
    return std::find(set.begin(), set.end(), v) != set.end();
}

}  // namespace

TEST_CASE("generator is deterministic and honours category counts") {
    GeneratorConfig cfg;
    cfg.category_counts = {{"shirts", 3}, {"coats", 5}};
    const auto a = generate_corpus(cfg, 7);
    const auto b = generate_corpus(cfg, 7);
    CHECK(a == b);
    CHECK(a != generate_corpus(cfg, 8));
    REQUIRE(a.size() == 8);
    CHECK(std::count_if(a.begin(), a.end(), [](const auto& i) { return i.attribute(Attribute::category) == "coats"; }) == 5);
    CHECK(a.front().id == "item-0000");
    CHECK(a.back().id == "item-0007");
}

TEST_CASE("balanced config spreads the remainder over the first categories") {
    const auto cfg = GeneratorConfig::balanced(10, 4);
    REQUIRE(cfg.category_counts.size() == 4);
    CHECK(cfg.category_counts[0].second == 3);
    CHECK(cfg.category_counts[1].second == 3);
    CHECK(cfg.category_counts[2].second == 2);
    CHECK(cfg.total() == 10);
    CHECK_THROWS(GeneratorConfig::balanced(10, 0));
    CHECK_THROWS(GeneratorConfig::balanced(10, 9));
}

TEST_CASE("generated items are valid and drawn from the closed sets") {
    const auto items = generate_corpus(GeneratorConfig::balanced(40, 8), 3);
    for (const auto& item : items) {
        CAPTURE(item.id);
        CHECK_NOTHROW(validate_item(item, 8));
        CHECK(in_set(category_set(), item.attribute(Attribute::category)));
        CHECK(in_set(composition_set(), item.attribute(Attribute::composition)));
        CHECK(in_set(color_set(), std::string(title_color(item))));
        CHECK(item.description.find(std::string(title_color(item))) != std::string::npos);
        CHECK(item.image.height == 32);
        CHECK(item.image.channels == 3);
        for (float p : item.image.pixels) {
            CHECK(p >= 0.0f);
            CHECK(p <= 1.0f);
        }
        // The image is a function of (category, composition, color).
        CHECK(item.image == render_item_image(item.attribute(Attribute::category),
                                              item.attribute(Attribute::composition), title_color(item), 32, 3));
    }
}

TEST_CASE("items within a category have distinct images until the combinations run out") {
    GeneratorConfig cfg;
    cfg.category_counts = {{"dresses", 20}};
    const auto items = generate_corpus(cfg, 5);
    std::set<std::vector<float>> images;
    for (const auto& i : items) images.insert(i.image.pixels);
    CHECK(images.size() == 20);
}

TEST_CASE("generator rejects bad geometry and unknown categories") {
    GeneratorConfig cfg;
    cfg.category_counts = {{"shirts", 1}};
    cfg.image_size = 30;
    CHECK_THROWS(generate_corpus(cfg, 1));
    cfg.image_size = 32;
    cfg.category_counts = {{"hats", 1}};
    CHECK_THROWS(generate_corpus(cfg, 1));
}

TEST_CASE("validate_item reports the first violated invariant") {
    auto item = generate_corpus(GeneratorConfig::balanced(1, 1), 1).front();
    CHECK_THROWS_WITH_AS(validate_item(item, 5), doctest::Contains("divisible"), std::invalid_argument);
    auto no_desc = item;
    no_desc.description.clear();
    CHECK_THROWS_AS(validate_item(no_desc, 8), std::invalid_argument);
    auto empty_attr = item;
    empty_attr.attribute(Attribute::season).clear();
    CHECK_THROWS_AS(validate_item(empty_attr, 8), std::invalid_argument);
}

TEST_CASE("tokenize lowercases and detaches trailing punctuation") {
    CHECK(tokenize("The image category is Shirts.") ==
          std::vector<std::string>{"the", "image", "category", "is", "shirts", "."});
    CHECK(tokenize("  a,  b ") == std::vector<std::string>{"a", ",", "b"});
    CHECK(tokenize("").empty());
}

TEST_CASE("vocabulary specials, lookup and persistence") {
    const auto items = generate_corpus(GeneratorConfig::balanced(16, 4), 2);
    const auto vocab = build_vocabulary(items);
    CHECK(vocab.token(0) == "[PAD]");
    CHECK(vocab.token(Vocabulary::mask_id()) == "[MASK]");
    CHECK(vocab.id("[CLS]") == Vocabulary::cls_id());
    CHECK(vocab.id("no-such-word") == Vocabulary::unk_id());
    CHECK(vocab.contains("image"));
    CHECK(vocab.contains("."));
    const auto words = vocab.tokens().subspan(Vocabulary::kSpecialCount);
    CHECK(std::is_sorted(words.begin(), words.end()));
    CHECK(build_vocabulary(items) == vocab);

    const auto path = std::filesystem::temp_directory_path() / "ffae_test_vocab.txt";
    vocab.save(path);
    CHECK(Vocabulary::load(path) == vocab);
    std::filesystem::remove(path);
}

TEST_CASE("attribute statements follow the template and invert") {
    CHECK(render_attribute_statement("category", "shirts") == "The image category is shirts.");
    const auto parsed = parse_attribute_statement("The image title is red slim cotton shirt.");
    REQUIRE(parsed);
    CHECK(parsed->first == "title");
    CHECK(parsed->second == "red slim cotton shirt");
    CHECK_FALSE(parse_attribute_statement("An image category is shirts."));
    CHECK_THROWS(render_attribute_statement("colour", "red"));
    CHECK_THROWS(render_attribute_statement("category", ""));
}

TEST_CASE("text input lays out description, separator and attribute spans") {
    const auto items = generate_corpus(GeneratorConfig::balanced(4, 2), 9);
    const auto vocab = build_vocabulary(items);
    const auto& item = items[1];
    const auto text = build_text_input(item, vocab);
    CHECK(text.tokens.front() == Vocabulary::cls_id());
    CHECK(text.description.begin == 1);
    CHECK(text.tokens[text.description.end] == Vocabulary::sep_id());
    CHECK(decode(text, vocab, text.description) == tokenize(item.description));
    for (auto a : kAttributeOrder) {
        CAPTURE(attribute_name(a));
        REQUIRE(text.span(a));
        CHECK(decode(text, vocab, *text.span(a)) == tokenize(item.attribute(a)));
    }
    // Statements appear in attribute order.
    for (std::size_t i = 1; i < kAttributeCount; ++i)
        CHECK(text.span(kAttributeOrder[i - 1])->end < text.span(kAttributeOrder[i])->begin);

    const auto without = build_text_input(item, vocab, StatementSelection::all().without(Attribute::category));
    CHECK_FALSE(without.span(Attribute::category));
    CHECK(without.tokens.size() == text.tokens.size() - tokenize(render_attribute_statement("category", item.attribute(Attribute::category))).size());
}

TEST_CASE("corpus directory round-trips exactly") {
    const auto items = generate_corpus(GeneratorConfig::balanced(6, 3), 4);
    const auto vocab = build_vocabulary(items);
    const auto dir = std::filesystem::temp_directory_path() / "ffae_test_corpus";
    std::filesystem::remove_all(dir);
    save_corpus(dir, items, vocab);
    CHECK(std::filesystem::exists(dir / "items.jsonl"));
    CHECK(std::filesystem::exists(dir / "vocab.txt"));
    CHECK(std::filesystem::exists(dir / "images" / "item-0000.ffimg"));
    const auto loaded = load_corpus(dir);
    CHECK(loaded.items == items);
    CHECK(loaded.vocab == vocab);
    std::filesystem::remove_all(dir);
    CHECK_THROWS(load_corpus(dir));
}

TEST_CASE("image files carry the FFAE magic and reject truncation") {
    const auto item = generate_corpus(GeneratorConfig::balanced(1, 1), 1).front();
    std::stringstream s;
    write_image(s, item.image);
    const std::string bytes = s.str();
    CHECK(bytes.substr(0, 4) == "FFAE");
    CHECK(bytes.size() == 4 + 12 + 32 * 32 * 3 * 4);
    std::stringstream in(bytes);
    CHECK(read_image(in) == item.image);
    std::stringstream cut(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS(read_image(cut));
}
