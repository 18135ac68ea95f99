#include "ffae/ffae.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ios>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "corpus/corpus_io.hpp"
#include "corpus/generator.hpp"
#include "evaluation/report.hpp"
#include "evaluation/retrieval.hpp"
#include "objectives/loss_check.hpp"
#include "tokenizer/codebook.hpp"
#include "tokenizer/patches.hpp"
#include "training/finetune.hpp"
#include "training/pretrain.hpp"

using namespace ffae;
namespace fs = std::filesystem;

struct ffae_corpus {
    corpus::CorpusBundle bundle;
};

struct ffae_codebook {
    tokenizer::Codebook codebook;
};

struct ffae_run_config {
    training::RunConfig config;
};

struct ffae_model {
    std::unique_ptr<model::FashionModel> model;
    corpus::Vocabulary vocab;
};

namespace {

thread_local std::string g_last_error;

bool contains(const std::string& s, const char* needle) { return s.find(needle) != std::string::npos; }

ffae_status classify(const std::exception& e) {
    const std::string what = e.what();
    if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::out_of_range*>(&e) ||
        dynamic_cast<const std::domain_error*>(&e))
        return FFAE_ERR_INVALID_ARGUMENT;
    if (dynamic_cast<const fs::filesystem_error*>(&e) || dynamic_cast<const std::ios_base::failure*>(&e))
        return FFAE_ERR_IO;
    if (dynamic_cast<const std::runtime_error*>(&e)) {
        if (contains(what, "non-finite")) return FFAE_ERR_NUMERIC;
        if (what.rfind("cannot ", 0) == 0) return FFAE_ERR_IO;
        return FFAE_ERR_FORMAT;
    }
    return FFAE_ERR_INTERNAL;
}

template <class F>
ffae_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return FFAE_OK;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return classify(e);
    } catch (...) {
        g_last_error = "unknown error";
        return FFAE_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

void copy_text(const std::string& text, char* buf, size_t cap, size_t* needed) {
    if (needed) *needed = text.size();
    if (cap == 0) return;
    require(buf != nullptr, "buffer is null");
    const size_t n = std::min(cap - 1, text.size());
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
}

std::size_t patch_size_for(const tokenizer::Codebook& cb, std::size_t channels) {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(cb.dim) / channels)));
    if (side == 0 || side * side * channels != cb.dim)
        throw std::invalid_argument("codebook dimension " + std::to_string(cb.dim) +
                                    " is not a square patch of " + std::to_string(channels) + " channels");
    return side;
}

std::vector<double> all_patches(const corpus::CorpusBundle& c, std::size_t patch_size, std::size_t& dim) {
    std::vector<double> out;
    dim = 0;
    for (const auto& item : c.items) {
        const auto grid = tokenizer::extract_patches(item.image, patch_size);
        dim = grid.dim();
        out.insert(out.end(), grid.values.begin(), grid.values.end());
    }
    return out;
}

std::vector<objectives::TrainingItem> eval_items(const ffae_model& m, const corpus::CorpusBundle& c) {
    if (!(m.vocab == c.vocab))
        throw std::invalid_argument("corpus vocabulary differs from the one the model was trained with");
    return objectives::prepare_training_items(c.items, c.vocab, nullptr, m.model->config().patch_size);
}

void save_model_dir(const ffae_model& m, const fs::path& dir) {
    fs::create_directories(dir);
    ad::save_parameters(dir / "model.ffck", m.model->parameters());
    m.model->config().save(dir / "model.cfg");
    m.vocab.save(dir / "vocab.txt");
}

evaluation::EvalRun to_core(const ffae_eval_run& r) {
    evaluation::EvalRun run;
    run.protocol = r.protocol == FFAE_PROTOCOL_FULL ? evaluation::Protocol::full : evaluation::Protocol::random_m;
    run.direction = r.direction == FFAE_T2I ? evaluation::Direction::t2i : evaluation::Direction::i2t;
    run.recalls = {r.recall_at_1, r.recall_at_5, r.recall_at_10};
    run.mean = r.mean;
    run.seed = r.seed;
    run.m = r.m;
    run.queries = r.queries;
    run.clamped_queries = r.clamped_queries;
    return run;
}

ffae_eval_run from_core(const evaluation::EvalRun& run) {
    ffae_eval_run r{};
    r.protocol = run.protocol == evaluation::Protocol::full ? FFAE_PROTOCOL_FULL : FFAE_PROTOCOL_RANDOM_M;
    r.direction = run.direction == evaluation::Direction::t2i ? FFAE_T2I : FFAE_I2T;
    r.recall_at_1 = run.recalls[0];
    r.recall_at_5 = run.recalls[1];
    r.recall_at_10 = run.recalls[2];
    r.mean = run.mean;
    r.seed = run.seed;
    r.m = run.m;
    r.queries = run.queries;
    r.clamped_queries = run.clamped_queries;
    return r;
}

}  // namespace

extern "C" {

const char* ffae_last_error(void) { return g_last_error.c_str(); }

const char* ffae_status_name(ffae_status status) {
    switch (status) {
        case FFAE_OK: return "ok";
        case FFAE_ERR_INVALID_ARGUMENT: return "invalid argument";
        case FFAE_ERR_IO: return "i/o error";
        case FFAE_ERR_FORMAT: return "format error";
        case FFAE_ERR_NUMERIC: return "numeric error";
        case FFAE_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

ffae_status ffae_corpus_generate(size_t n_items, size_t n_categories, uint64_t seed, ffae_corpus** out) {
    return guarded([&] {
        require(out != nullptr, "output handle is null");
        require(n_items > 0, "corpus needs at least one item");
        auto c = std::make_unique<ffae_corpus>();
        c->bundle.items = corpus::generate_corpus(corpus::GeneratorConfig::balanced(n_items, n_categories), seed);
        c->bundle.vocab = corpus::build_vocabulary(c->bundle.items);
        *out = c.release();
    });
}

ffae_status ffae_corpus_save(const ffae_corpus* c, const char* dir) {
    return guarded([&] {
        require(c && dir, "corpus or directory is null");
        corpus::save_corpus(dir, c->bundle.items, c->bundle.vocab);
    });
}

ffae_status ffae_corpus_load(const char* dir, ffae_corpus** out) {
    return guarded([&] {
        require(dir && out, "directory or output handle is null");
        auto c = std::make_unique<ffae_corpus>();
        c->bundle = corpus::load_corpus(dir);
        *out = c.release();
    });
}

size_t ffae_corpus_size(const ffae_corpus* c) { return c ? c->bundle.items.size() : 0; }
size_t ffae_corpus_vocab_size(const ffae_corpus* c) { return c ? c->bundle.vocab.size() : 0; }
void ffae_corpus_free(ffae_corpus* c) { delete c; }

ffae_status ffae_codebook_train(const ffae_corpus* c, size_t k, size_t iterations, size_t patch_size, uint64_t seed,
                                ffae_codebook** out) {
    return guarded([&] {
        require(c && out, "corpus or output handle is null");
        std::size_t dim = 0;
        const auto patches = all_patches(c->bundle, patch_size, dim);
        require(dim > 0, "corpus has no patches");
        auto cb = std::make_unique<ffae_codebook>();
        cb->codebook = tokenizer::train_codebook(patches, dim, {k, iterations, seed});
        *out = cb.release();
    });
}

ffae_status ffae_codebook_save(const ffae_codebook* cb, const char* path) {
    return guarded([&] {
        require(cb && path, "codebook or path is null");
        tokenizer::save_codebook(path, cb->codebook);
    });
}

ffae_status ffae_codebook_load(const char* path, ffae_codebook** out) {
    return guarded([&] {
        require(path && out, "path or output handle is null");
        auto cb = std::make_unique<ffae_codebook>();
        cb->codebook = tokenizer::load_codebook(path);
        *out = cb.release();
    });
}

size_t ffae_codebook_size(const ffae_codebook* cb) { return cb ? cb->codebook.k : 0; }
void ffae_codebook_free(ffae_codebook* cb) { delete cb; }

ffae_status ffae_run_config_create(const char* profile, ffae_run_config** out) {
    return guarded([&] {
        require(out != nullptr, "output handle is null");
        auto c = std::make_unique<ffae_run_config>();
        if (profile) training::set_config_value(c->config, "profile", profile);
        c->config = training::profile_defaults(c->config.profile);
        *out = c.release();
    });
}

ffae_status ffae_run_config_load(const char* path, ffae_run_config** out) {
    return guarded([&] {
        require(path && out, "path or output handle is null");
        auto c = std::make_unique<ffae_run_config>();
        c->config = training::load_config(path);
        *out = c.release();
    });
}

ffae_status ffae_run_config_set(ffae_run_config* c, const char* key, const char* value) {
    return guarded([&] {
        require(c && key && value, "config, key or value is null");
        auto updated = c->config;
        if (std::string(key) == "profile") {
            // Switching profile resets the profile-controlled values.
            training::set_config_value(updated, key, value);
            const auto defaults = training::profile_defaults(updated.profile);
            updated.lr = defaults.lr;
            updated.batch_size = defaults.batch_size;
        } else {
            training::set_config_value(updated, key, value);
        }
        c->config = updated;
    });
}

ffae_status ffae_run_config_to_text(const ffae_run_config* c, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        require(c != nullptr, "config is null");
        copy_text(c->config.to_text(), buf, cap, needed);
    });
}

void ffae_run_config_free(ffae_run_config* c) { delete c; }

ffae_status ffae_pretrain(const ffae_run_config* cfg, const ffae_corpus* c, const ffae_codebook* cb,
                          const char* out_dir, const char* resume_dir, ffae_progress_fn progress, void* user,
                          ffae_model** out) {
    return guarded([&] {
        require(cfg && c && cb, "config, corpus or codebook is null");
        const auto& config = cfg->config;
        config.validate();
        require(!c->bundle.items.empty(), "corpus is empty");
        const auto& first = c->bundle.items.front().image;
        const std::size_t patch_size = patch_size_for(cb->codebook, first.channels);
        const auto items = objectives::prepare_training_items(c->bundle.items, c->bundle.vocab, &cb->codebook,
                                                              patch_size);

        model::ModelConfig mc;
        if (resume_dir) {
            mc = model::ModelConfig::load(fs::path(resume_dir) / "model.cfg");
        } else {
            std::size_t longest = 0;
            for (const auto& it : items) longest = std::max(longest, it.text.tokens.size());
            const std::size_t grid = (first.height / patch_size) * (first.width / patch_size);
            mc = training::make_model_config(config, c->bundle.vocab.size(), cb->codebook.k, grid, cb->codebook.dim,
                                             patch_size, std::max<std::size_t>(96, longest));
        }
        auto handle = std::make_unique<ffae_model>();
        handle->model = std::make_unique<model::FashionModel>(mc, Rng::derive_seed(config.seed, 0));
        handle->vocab = c->bundle.vocab;
        require(mc.vocab_size == c->bundle.vocab.size(), "checkpoint vocabulary size differs from the corpus");
        require(mc.patch_labels == cb->codebook.k, "checkpoint patch label count differs from the codebook");

        training::Pretrainer trainer(*handle->model, items, config);
        if (resume_dir) trainer.load_checkpoint(resume_dir);
        const auto save = [&] {
            if (!out_dir) return;
            trainer.save_checkpoint(out_dir);
            handle->vocab.save(fs::path(out_dir) / "vocab.txt");
            std::ofstream(fs::path(out_dir) / "run.cfg") << config.to_text();
        };
        while (trainer.step_count() < config.steps) {
            const auto before = trainer.log().size();
            trainer.step();
            if (progress)
                for (auto i = before; i < trainer.log().size(); ++i) {
                    const auto& r = trainer.log()[i];
                    progress(r.step, std::string(objectives::task_name(r.task)).c_str(), r.loss, user);
                }
            if (config.checkpoint_every && trainer.step_count() % config.checkpoint_every == 0 &&
                trainer.step_count() < config.steps)
                save();
        }
        save();
        if (out) *out = handle.release();
    });
}

ffae_status ffae_model_load(const char* dir, ffae_model** out) {
    return guarded([&] {
        require(dir && out, "directory or output handle is null");
        const fs::path d(dir);
        auto handle = std::make_unique<ffae_model>();
        handle->model = std::make_unique<model::FashionModel>(model::ModelConfig::load(d / "model.cfg"), 0);
        ad::load_parameters(d / "model.ffck", handle->model->parameters());
        handle->vocab = corpus::Vocabulary::load(d / "vocab.txt");
        *out = handle.release();
    });
}

ffae_status ffae_model_save(const ffae_model* m, const char* dir) {
    return guarded([&] {
        require(m && dir, "model or directory is null");
        save_model_dir(*m, dir);
    });
}

size_t ffae_model_parameter_count(const ffae_model* m) { return m ? m->model->parameters().scalar_count() : 0; }
void ffae_model_free(ffae_model* m) { delete m; }

ffae_finetune_options ffae_finetune_defaults(void) {
    const training::FinetuneConfig d;
    return {"category", d.steps, d.batch_size, d.lr, d.freeze_backbone ? 1 : 0, d.seed};
}

ffae_status ffae_finetune(ffae_model* m, const ffae_corpus* c, const ffae_finetune_options* options,
                          ffae_classification_result* out) {
    return guarded([&] {
        require(m && c && options && out, "model, corpus, options or result is null");
        require(m->vocab == c->bundle.vocab, "corpus vocabulary differs from the one the model was trained with");
        training::FinetuneConfig fc;
        const std::string field = options->label_field ? options->label_field : "category";
        const auto attr = corpus::parse_attribute(field);
        if (!attr || (*attr != corpus::Attribute::category && *attr != corpus::Attribute::subcategory))
            throw std::invalid_argument("unknown label field \"" + field + "\" (expected category or subcategory)");
        fc.label_field = *attr;
        fc.steps = options->steps;
        fc.batch_size = options->batch_size;
        fc.lr = options->lr;
        fc.freeze_backbone = options->freeze_backbone != 0;
        fc.seed = options->seed;
        const auto result = training::finetune_classifier(*m->model, c->bundle.items, m->vocab, fc);
        *out = {result.accuracy, result.macro_f1, result.final_loss, result.classes.size(), result.labels.size()};
    });
}

ffae_status ffae_evaluate(const ffae_model* m, const ffae_corpus* c, ffae_protocol protocol, ffae_direction direction,
                          size_t mm, uint64_t seed, size_t itm_rerank_top, ffae_eval_run* out) {
    return guarded([&] {
        require(m && c && out, "model, corpus or result is null");
        require(protocol == FFAE_PROTOCOL_FULL || protocol == FFAE_PROTOCOL_RANDOM_M, "unknown protocol");
        require(direction == FFAE_I2T || direction == FFAE_T2I, "unknown direction");
        const auto items = eval_items(*m, c->bundle);
        std::vector<std::string> ids, categories;
        for (const auto& it : items) {
            ids.push_back(it.id);
            categories.push_back(it.category);
        }
        const auto features = evaluation::embed_corpus(*m->model, items);
        auto sim = evaluation::similarity_matrix(
            features, ids, direction == FFAE_T2I ? evaluation::Direction::t2i : evaluation::Direction::i2t);
        if (itm_rerank_top > 0) evaluation::itm_rerank(sim, *m->model, items, itm_rerank_top);
        const auto run = protocol == FFAE_PROTOCOL_FULL ? evaluation::protocol_full(sim)
                                                        : evaluation::protocol_random_m(sim, categories, mm, seed);
        *out = from_core(run);
    });
}

ffae_status ffae_eval_run_to_json(const ffae_eval_run* run, char* buf, size_t cap, size_t* needed) {
    return guarded([&] {
        require(run != nullptr, "run is null");
        copy_text(evaluation::to_json(to_core(*run)), buf, cap, needed);
    });
}

ffae_status ffae_eval_run_from_json(const char* json, ffae_eval_run* out) {
    return guarded([&] {
        require(json && out, "json or result is null");
        *out = from_core(evaluation::eval_run_from_json(json));
    });
}

ffae_status ffae_report(const char* out_dir, const ffae_eval_run* runs, size_t n_runs,
                        const char* const* loss_log_paths, size_t n_logs) {
    return guarded([&] {
        require(out_dir != nullptr, "output directory is null");
        require(n_runs == 0 || runs, "runs is null");
        require(n_logs == 0 || loss_log_paths, "loss log paths is null");
        std::vector<evaluation::EvalRun> core_runs;
        for (size_t i = 0; i < n_runs; ++i) core_runs.push_back(to_core(runs[i]));
        std::vector<evaluation::NamedLossLog> logs;
        for (size_t i = 0; i < n_logs; ++i) {
            require(loss_log_paths[i] != nullptr, "loss log path is null");
            logs.push_back({loss_log_paths[i], training::read_loss_log(loss_log_paths[i])});
        }
        evaluation::write_report(out_dir, core_runs, logs);
    });
}

ffae_status ffae_gradcheck(const char* task, uint64_t seed, size_t coords_per_param, int desk_scale,
                           double* max_relative_error) {
    return guarded([&] {
        require(task && max_relative_error, "task or result is null");
        const auto t = objectives::parse_task(task);
        if (!t) throw std::invalid_argument(std::string("unknown task \"") + task + "\"");
        auto options = objectives::loss_check_defaults();
        options.coords_per_param = coords_per_param;
        const auto scale = desk_scale ? objectives::CheckScale::desk : objectives::CheckScale::tiny;
        *max_relative_error = objectives::check_task_gradients(*t, seed, options, scale).max_relative_error;
    });
}

}  // extern "C"
