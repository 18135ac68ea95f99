#include "training/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <numbers>
#include <stdexcept>

namespace ffae::training {
namespace {

constexpr std::array<const char*, objectives::kTaskCount> kWeightKeys = {"p_aetp", "p_apir", "p_itc", "p_mlm",
                                                                        "p_itm"};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& v) {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters in number \"" + v + "\"");
    return d;
}

std::uint64_t parse_unsigned(const std::string& v) {
    if (v.empty() || v[0] == '-') throw std::invalid_argument("expected a non-negative integer, got \"" + v + "\"");
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters in integer \"" + v + "\"");
    return n;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("expected true/false, got \"" + v + "\"");
}

Profile parse_profile(const std::string& v) {
    if (v == "desk") return Profile::desk;
    if (v == "paper") return Profile::paper;
    throw std::invalid_argument("profile must be desk or paper, got \"" + v + "\"");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

objectives::TaskSchedule RunConfig::schedule() const {
    auto s = objectives::TaskSchedule::from_weights(task_weights);
    s.simultaneous_aetp_mlm = simultaneous_aetp_mlm;
    return s;
}

double RunConfig::lr_at(std::size_t step) const {
    if (lr_schedule == LrSchedule::constant || steps == 0) return lr;
    const double progress = static_cast<double>(std::min(step, steps)) / static_cast<double>(steps);
    return 0.5 * lr * (1.0 + std::cos(std::numbers::pi * progress));
}

void RunConfig::validate() const {
    const auto fail = [](const std::string& m) { throw std::invalid_argument("run config: " + m); };
    if (!(lr > 0.0)) fail("lr must be > 0");
    const auto sched = schedule();
    if (batch_size < 2 && sched.probability(objectives::Task::itm) > 0.0)
        fail("batch_size must be >= 2 while ITM is enabled");
    if (batch_size == 0) fail("batch_size must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("betas must be in [0, 1)");
    if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
    if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
    if (!(mlm_ratio >= 0.0 && mlm_ratio <= 1.0)) fail("mlm_ratio must be in [0, 1]");
    if (!(itc_temperature > 0.0)) fail("itc_temperature must be > 0");
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    out << "profile=" << (profile == Profile::desk ? "desk" : "paper") << '\n'
        << "lr=" << format_double(lr) << '\n'
        << "lr_schedule=" << (lr_schedule == LrSchedule::constant ? "constant" : "cosine") << '\n'
        << "batch_size=" << batch_size << '\n'
        << "beta1=" << format_double(beta1) << '\n'
        << "beta2=" << format_double(beta2) << '\n'
        << "adam_eps=" << format_double(adam_eps) << '\n'
        << "weight_decay=" << format_double(weight_decay) << '\n'
        << "steps=" << steps << '\n'
        << "seed=" << seed << '\n';
    for (std::size_t i = 0; i < kWeightKeys.size(); ++i)
        out << kWeightKeys[i] << '=' << format_double(task_weights[i]) << '\n';
    out << "simultaneous_aetp_mlm=" << (simultaneous_aetp_mlm ? "true" : "false") << '\n'
        << "checkpoint_every=" << checkpoint_every << '\n'
        << "mlm_ratio=" << format_double(mlm_ratio) << '\n'
        << "aetp_n=" << aetp_n << '\n'
        << "itc_temperature=" << format_double(itc_temperature) << '\n'
        << "embed_dim=" << embed_dim << '\n'
        << "n_layers_text_fusion=" << n_layers_text_fusion << '\n'
        << "split_point=" << split_point << '\n'
        << "n_layers_image=" << n_layers_image << '\n'
        << "n_heads=" << n_heads << '\n'
        << "mlp_hidden=" << mlp_hidden << '\n'
        << "corpus_dir=" << corpus_dir << '\n'
        << "codebook_path=" << codebook_path << '\n'
        << "out_dir=" << out_dir << '\n';
    return out.str();
}

namespace {

LrSchedule parse_lr_schedule(const std::string& v) {
    if (v == "constant") return LrSchedule::constant;
    if (v == "cosine") return LrSchedule::cosine;
    throw std::invalid_argument("lr_schedule must be constant or cosine, got \"" + v + "\"");
}

}  // namespace

RunConfig profile_defaults(Profile profile) {
    RunConfig c;
    c.profile = profile;
    if (profile == Profile::paper) {
        c.lr = 1e-5;
        c.batch_size = 128;
    }
    return c;
}

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    for (std::size_t i = 0; i < kWeightKeys.size(); ++i) {
        if (key == kWeightKeys[i]) {
            c.task_weights[i] = parse_double(value);
            return;
        }
    }
    if (key == "profile") c.profile = parse_profile(value);
    else if (key == "lr") c.lr = parse_double(value);
    else if (key == "lr_schedule") c.lr_schedule = parse_lr_schedule(value);
    else if (key == "batch_size") c.batch_size = parse_unsigned(value);
    else if (key == "beta1") c.beta1 = parse_double(value);
    else if (key == "beta2") c.beta2 = parse_double(value);
    else if (key == "adam_eps") c.adam_eps = parse_double(value);
    else if (key == "weight_decay") c.weight_decay = parse_double(value);
    else if (key == "steps") c.steps = parse_unsigned(value);
    else if (key == "seed") c.seed = parse_unsigned(value);
    else if (key == "simultaneous_aetp_mlm") c.simultaneous_aetp_mlm = parse_bool(value);
    else if (key == "checkpoint_every") c.checkpoint_every = parse_unsigned(value);
    else if (key == "mlm_ratio") c.mlm_ratio = parse_double(value);
    else if (key == "aetp_n") c.aetp_n = parse_unsigned(value);
    else if (key == "itc_temperature") c.itc_temperature = parse_double(value);
    else if (key == "embed_dim") c.embed_dim = parse_unsigned(value);
    else if (key == "n_layers_text_fusion") c.n_layers_text_fusion = parse_unsigned(value);
    else if (key == "split_point") c.split_point = parse_unsigned(value);
    else if (key == "n_layers_image") c.n_layers_image = parse_unsigned(value);
    else if (key == "n_heads") c.n_heads = parse_unsigned(value);
    else if (key == "mlp_hidden") c.mlp_hidden = parse_unsigned(value);
    else if (key == "corpus_dir") c.corpus_dir = value;
    else if (key == "codebook_path") c.codebook_path = value;
    else if (key == "out_dir") c.out_dir = value;
    else throw std::invalid_argument("unknown key \"" + key + "\"");
}

RunConfig parse_config(const std::string& text) {
    struct Line {
        std::size_t number;
        std::string key;
        std::string value;
    };
    std::vector<Line> lines;
    std::istringstream in(text);
    std::size_t number = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++number;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("config line " + std::to_string(number) + ": expected key=value");
        lines.push_back({number, trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
    }

    RunConfig config;
    for (const auto& l : lines) {
        if (l.key != "profile") continue;
        try {
            config = profile_defaults(parse_profile(l.value));
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(l.number) + ": " + e.what());
        }
    }
    for (const auto& l : lines) {
        try {
            set_config_value(config, l.key, l.value);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(l.number) + ": " + e.what());
        }
    }
    config.validate();
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

model::ModelConfig make_model_config(const RunConfig& config, std::size_t vocab_size, std::size_t patch_labels,
                                     std::size_t patch_count, std::size_t patch_dim, std::size_t patch_size,
                                     std::size_t max_text_len) {
    model::ModelConfig m;
    m.embed_dim = config.embed_dim;
    m.n_layers_text_fusion = config.n_layers_text_fusion;
    m.split_point = config.split_point;
    m.n_layers_image = config.n_layers_image;
    m.n_heads = config.n_heads;
    m.mlp_hidden = config.mlp_hidden;
    m.vocab_size = vocab_size;
    m.patch_labels = patch_labels;
    m.patch_count = patch_count;
    m.patch_dim = patch_dim;
    m.patch_size = patch_size;
    m.max_text_len = max_text_len;
    m.validate();
    return m;
}

}  // namespace ffae::training
