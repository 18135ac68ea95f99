#include "model/model_config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ffae::model {

void ModelConfig::validate() const {
    const auto fail = [](const std::string& msg) { throw std::invalid_argument("ModelConfig: " + msg); };
    if (embed_dim == 0 || n_heads == 0 || embed_dim % n_heads != 0) fail("embed_dim must be divisible by n_heads");
    if (embed_dim < 2) fail("embed_dim must be >= 2");
    if (!(split_point > 0 && split_point < n_layers_text_fusion)) fail("need 0 < split_point < n_layers_text_fusion");
    if (vocab_size == 0) fail("vocab_size must be set");
    if (patch_labels == 0) fail("patch_labels must be >= 1");
    if (patch_count == 0 || patch_dim == 0) fail("patch_count and patch_dim must be set");
    if (max_text_len == 0) fail("max_text_len must be >= 1");
}

std::string ModelConfig::to_text() const {
    std::ostringstream out;
    out << "embed_dim=" << embed_dim << '\n'
        << "n_layers_text_fusion=" << n_layers_text_fusion << '\n'
        << "split_point=" << split_point << '\n'
        << "n_layers_image=" << n_layers_image << '\n'
        << "n_heads=" << n_heads << '\n'
        << "mlp_hidden=" << mlp_hidden << '\n'
        << "vocab_size=" << vocab_size << '\n'
        << "patch_labels=" << patch_labels << '\n'
        << "max_text_len=" << max_text_len << '\n'
        << "patch_count=" << patch_count << '\n'
        << "patch_dim=" << patch_dim << '\n'
        << "patch_size=" << patch_size << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", init_std);
    out << "init_std=" << buf << '\n';
    return out.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
    ModelConfig c;
    std::istringstream in(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("model config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        try {
            if (key == "init_std") {
                c.init_std = std::stod(value);
                continue;
            }
            const std::size_t v = std::stoul(value);
            if (key == "embed_dim") c.embed_dim = v;
            else if (key == "n_layers_text_fusion") c.n_layers_text_fusion = v;
            else if (key == "split_point") c.split_point = v;
            else if (key == "n_layers_image") c.n_layers_image = v;
            else if (key == "n_heads") c.n_heads = v;
            else if (key == "mlp_hidden") c.mlp_hidden = v;
            else if (key == "vocab_size") c.vocab_size = v;
            else if (key == "patch_labels") c.patch_labels = v;
            else if (key == "max_text_len") c.max_text_len = v;
            else if (key == "patch_count") c.patch_count = v;
            else if (key == "patch_dim") c.patch_dim = v;
            else if (key == "patch_size") c.patch_size = v;
            else throw std::invalid_argument("unknown key " + key);
        } catch (const std::logic_error& e) {
            throw std::invalid_argument("model config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return c;
}

void ModelConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_text();
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return from_text(text.str());
}

}  // namespace ffae::model
