#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ffae/ffae.h"

namespace fs = std::filesystem;

namespace {

struct Failure {
    std::string message;
};

void check(ffae_status status, const std::string& what) {
    if (status != FFAE_OK) throw Failure{what + ": " + ffae_last_error()};
}

template <class T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(ptr); }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using Corpus = Handle<ffae_corpus, ffae_corpus_free>;
using Codebook = Handle<ffae_codebook, ffae_codebook_free>;
using RunConfig = Handle<ffae_run_config, ffae_run_config_free>;
using Model = Handle<ffae_model, ffae_model_free>;

fs::path data_root() {
    if (const char* env = std::getenv("FFAE_DATA_DIR"); env && *env) return env;
    return "ffae-data";
}

// A missing --seed is drawn here and printed so the run can be repeated.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    std::random_device rd;
    const std::uint64_t drawn = (static_cast<std::uint64_t>(rd()) << 32) | rd();
    std::printf("seed=%llu\n", static_cast<unsigned long long>(drawn));
    return drawn;
}

std::string json_of(const ffae_eval_run& run) {
    std::size_t needed = 0;
    check(ffae_eval_run_to_json(&run, nullptr, 0, &needed), "eval run");
    std::string text(needed + 1, '\0');
    check(ffae_eval_run_to_json(&run, text.data(), text.size(), &needed), "eval run");
    text.resize(needed);
    return text;
}

std::string config_text(const ffae_run_config* config) {
    std::size_t needed = 0;
    check(ffae_run_config_to_text(config, nullptr, 0, &needed), "config");
    std::string text(needed + 1, '\0');
    check(ffae_run_config_to_text(config, text.data(), text.size(), &needed), "config");
    text.resize(needed);
    return text;
}

bool file_sets_seed(const std::string& path) {
    std::ifstream in(path);
    for (std::string line; std::getline(in, line);) {
        const auto b = line.find_first_not_of(" \t");
        if (b != std::string::npos && line.compare(b, 4, "seed") == 0) {
            const auto rest = line.find_first_not_of(" \t", b + 4);
            if (rest != std::string::npos && line[rest] == '=') return true;
        }
    }
    return false;
}

void print_progress(std::size_t step, const char* task, double loss, void* user) {
    const auto every = *static_cast<std::size_t*>(user);
    if (every && (step + 1) % every == 0) std::printf("step %zu  %-4s  %.4f\n", step + 1, task, loss);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attribute-aware fashion vision-language pre-training at desk scale"};
    app.require_subcommand(1);
    const fs::path root = data_root();

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic fashion corpus");
    std::size_t gen_n = 64, gen_categories = 8;
    std::optional<std::uint64_t> gen_seed;
    std::string gen_out = (root / "corpus").string();
    gen->add_option("--n", gen_n, "Number of items")->capture_default_str()->check(CLI::PositiveNumber);
    gen->add_option("--categories", gen_categories, "Categories the items are spread over (1-8)")
        ->capture_default_str()
        ->check(CLI::Range(1, 8));
    gen->add_option("--seed", gen_seed, "Random seed (drawn and printed when omitted)");
    gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

    // train-tokenizer
    auto* tok = app.add_subcommand("train-tokenizer", "Fit the patch codebook");
    std::string tok_corpus = (root / "corpus").string(), tok_out = (root / "codebook.ffvq").string();
    std::size_t tok_k = 64, tok_iters = 25, tok_patch = 8;
    std::optional<std::uint64_t> tok_seed;
    tok->add_option("--corpus", tok_corpus, "Corpus directory")->capture_default_str();
    tok->add_option("--k", tok_k, "Codebook size")->capture_default_str()->check(CLI::PositiveNumber);
    tok->add_option("--iterations", tok_iters, "Refinement iterations")->capture_default_str();
    tok->add_option("--patch-size", tok_patch, "Patch side in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    tok->add_option("--seed", tok_seed, "Random seed (drawn and printed when omitted)");
    tok->add_option("--out", tok_out, "Codebook file")->capture_default_str();

    // pretrain
    auto* pre = app.add_subcommand("pretrain", "Pre-train the model");
    std::string pre_config, pre_corpus = (root / "corpus").string(), pre_codebook = (root / "codebook.ffvq").string();
    std::string pre_out = (root / "model").string(), pre_resume;
    std::optional<std::uint64_t> pre_seed;
    std::optional<std::size_t> pre_steps;
    std::vector<std::string> pre_set;
    std::size_t pre_log_every = 100;
    bool pre_print_config = false;
    pre->add_option("--config", pre_config, "Run config file (key=value)")->check(CLI::ExistingFile);
    pre->add_option("--corpus", pre_corpus, "Corpus directory")->capture_default_str();
    pre->add_option("--codebook", pre_codebook, "Codebook file")->capture_default_str();
    pre->add_option("--out", pre_out, "Checkpoint directory")->capture_default_str();
    pre->add_option("--resume", pre_resume, "Continue from this checkpoint directory");
    pre->add_option("--seed", pre_seed, "Random seed (overrides the config; drawn and printed when absent from both)");
    pre->add_option("--steps", pre_steps, "Total steps (overrides the config)");
    pre->add_option("--set", pre_set, "Extra key=value config entries, applied last");
    pre->add_option("--log-every", pre_log_every, "Print a loss line every N steps (0 = never)")->capture_default_str();
    pre->add_flag("--print-config", pre_print_config, "Print the resolved config and exit");

    // finetune
    auto* fine = app.add_subcommand("finetune", "Fine-tune a category or subcategory classifier");
    std::string fine_model = (root / "model").string(), fine_corpus = (root / "corpus").string(), fine_label = "category";
    std::string fine_out;
    auto defaults = ffae_finetune_defaults();
    std::size_t fine_steps = defaults.steps, fine_batch = defaults.batch_size;
    double fine_lr = defaults.lr;
    bool fine_freeze = false;
    std::optional<std::uint64_t> fine_seed;
    fine->add_option("--model", fine_model, "Pre-trained model directory")->capture_default_str();
    fine->add_option("--corpus", fine_corpus, "Corpus directory")->capture_default_str();
    fine->add_option("--label", fine_label, "Label field")
        ->capture_default_str()
        ->check(CLI::IsMember({"category", "subcategory"}));
    fine->add_option("--steps", fine_steps, "Training steps")->capture_default_str();
    fine->add_option("--batch-size", fine_batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
    fine->add_option("--lr", fine_lr, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    fine->add_flag("--freeze", fine_freeze, "Train only the classifier head");
    fine->add_option("--seed", fine_seed, "Random seed (drawn and printed when omitted)");
    fine->add_option("--out", fine_out, "Save the fine-tuned backbone here");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Cross-modal retrieval metrics");
    std::string eval_model = (root / "model").string(), eval_corpus = (root / "corpus").string();
    std::string eval_protocol = "full", eval_direction = "both", eval_runs = (root / "eval_runs.jsonl").string();
    std::size_t eval_m = 100, eval_rerank = 0;
    std::optional<std::uint64_t> eval_seed;
    bool eval_append = false;
    eval->add_option("--model", eval_model, "Model directory")->capture_default_str();
    eval->add_option("--corpus", eval_corpus, "Corpus directory")->capture_default_str();
    eval->add_option("--protocol", eval_protocol, "full or random_m")
        ->capture_default_str()
        ->check(CLI::IsMember({"full", "random_m"}));
    eval->add_option("--direction", eval_direction, "i2t, t2i or both")
        ->capture_default_str()
        ->check(CLI::IsMember({"i2t", "t2i", "both"}));
    eval->add_option("--m", eval_m, "Candidate pool size for random_m")->capture_default_str()->check(CLI::PositiveNumber);
    eval->add_option("--seed", eval_seed, "Pool sampling seed for random_m (drawn and printed when omitted)");
    eval->add_option("--itm-rerank", eval_rerank, "Re-score the top N candidates with the matching head (0 = off)")
        ->capture_default_str();
    eval->add_option("--runs-out", eval_runs, "JSON-lines file receiving the runs")->capture_default_str();
    eval->add_flag("--append", eval_append, "Append to --runs-out instead of replacing it");

    // gradcheck
    auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every loss");
    std::optional<std::uint64_t> grad_seed;
    std::string grad_task = "all";
    std::size_t grad_coords = 4;
    bool grad_desk = false;
    grad->add_option("--seed", grad_seed, "Random seed (drawn and printed when omitted)");
    grad->add_option("--task", grad_task, "aetp, apir, itc, mlm, itm or all")
        ->capture_default_str()
        ->check(CLI::IsMember({"aetp", "apir", "itc", "mlm", "itm", "all"}));
    grad->add_option("--coords", grad_coords, "Coordinates per parameter tensor (0 = all)")->capture_default_str();
    grad->add_flag("--desk", grad_desk, "Use the desk architecture instead of the tiny one");

    // report
    auto* rep = app.add_subcommand("report", "Write metrics.csv and summary.txt");
    std::string rep_runs = (root / "eval_runs.jsonl").string(), rep_out = (root / "report").string();
    std::vector<std::string> rep_logs;
    rep->add_option("--runs", rep_runs, "JSON-lines file of eval runs")->capture_default_str();
    rep->add_option("--loss-log", rep_logs, "Loss CSV files to summarize");
    rep->add_option("--out", rep_out, "Report directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    try {
        if (*gen) {
            const auto seed = resolve_seed(gen_seed);
            Corpus corpus;
            check(ffae_corpus_generate(gen_n, gen_categories, seed, corpus.out()), "gen-corpus");
            check(ffae_corpus_save(corpus.get(), gen_out.c_str()), "gen-corpus");
            std::printf("%zu items, vocabulary %zu -> %s\n", ffae_corpus_size(corpus.get()),
                        ffae_corpus_vocab_size(corpus.get()), gen_out.c_str());
        } else if (*tok) {
            const auto seed = resolve_seed(tok_seed);
            Corpus corpus;
            Codebook codebook;
            check(ffae_corpus_load(tok_corpus.c_str(), corpus.out()), "train-tokenizer");
            check(ffae_codebook_train(corpus.get(), tok_k, tok_iters, tok_patch, seed, codebook.out()),
                  "train-tokenizer");
            check(ffae_codebook_save(codebook.get(), tok_out.c_str()), "train-tokenizer");
            std::printf("codebook K=%zu -> %s\n", ffae_codebook_size(codebook.get()), tok_out.c_str());
        } else if (*pre) {
            RunConfig config;
            if (pre_config.empty())
                check(ffae_run_config_create("desk", config.out()), "pretrain");
            else
                check(ffae_run_config_load(pre_config.c_str(), config.out()), "pretrain");
            bool seed_set = !pre_config.empty() && file_sets_seed(pre_config);
            for (const auto& kv : pre_set) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw Failure{"pretrain: --set expects key=value, got \"" + kv + "\""};
                const auto key = kv.substr(0, eq);
                check(ffae_run_config_set(config.get(), key.c_str(), kv.substr(eq + 1).c_str()), "pretrain");
                seed_set = seed_set || key == "seed";
            }
            if (pre_steps) check(ffae_run_config_set(config.get(), "steps", std::to_string(*pre_steps).c_str()), "pretrain");
            if (pre_seed || !seed_set) {
                const auto seed = resolve_seed(pre_seed);
                check(ffae_run_config_set(config.get(), "seed", std::to_string(seed).c_str()), "pretrain");
            }
            if (pre_print_config) {
                std::cout << config_text(config.get());
                return 0;
            }
            Corpus corpus;
            Codebook codebook;
            check(ffae_corpus_load(pre_corpus.c_str(), corpus.out()), "pretrain");
            check(ffae_codebook_load(pre_codebook.c_str(), codebook.out()), "pretrain");
            Model model;
            check(ffae_pretrain(config.get(), corpus.get(), codebook.get(), pre_out.c_str(),
                                pre_resume.empty() ? nullptr : pre_resume.c_str(), print_progress, &pre_log_every,
                                model.out()),
                  "pretrain");
            std::printf("%zu parameters -> %s\n", ffae_model_parameter_count(model.get()), pre_out.c_str());
        } else if (*fine) {
            auto options = ffae_finetune_defaults();
            options.label_field = fine_label.c_str();
            options.steps = fine_steps;
            options.batch_size = fine_batch;
            options.lr = fine_lr;
            options.freeze_backbone = fine_freeze ? 1 : 0;
            options.seed = resolve_seed(fine_seed);
            Model model;
            Corpus corpus;
            check(ffae_model_load(fine_model.c_str(), model.out()), "finetune");
            check(ffae_corpus_load(fine_corpus.c_str(), corpus.out()), "finetune");
            ffae_classification_result result{};
            check(ffae_finetune(model.get(), corpus.get(), &options, &result), "finetune");
            std::printf("%s: %zu classes, %zu items, accuracy %.4f, macro-F1 %.4f, final loss %.4f\n",
                        fine_label.c_str(), result.num_classes, result.num_items, result.accuracy, result.macro_f1,
                        result.final_loss);
            if (!fine_out.empty()) check(ffae_model_save(model.get(), fine_out.c_str()), "finetune");
        } else if (*eval) {
            const auto protocol = eval_protocol == "full" ? FFAE_PROTOCOL_FULL : FFAE_PROTOCOL_RANDOM_M;
            const std::uint64_t seed = protocol == FFAE_PROTOCOL_RANDOM_M ? resolve_seed(eval_seed) : eval_seed.value_or(0);
            Model model;
            Corpus corpus;
            check(ffae_model_load(eval_model.c_str(), model.out()), "evaluate");
            check(ffae_corpus_load(eval_corpus.c_str(), corpus.out()), "evaluate");
            std::vector<ffae_direction> directions;
            if (eval_direction != "t2i") directions.push_back(FFAE_I2T);
            if (eval_direction != "i2t") directions.push_back(FFAE_T2I);
            if (const auto parent = fs::path(eval_runs).parent_path(); !parent.empty()) fs::create_directories(parent);
            std::ofstream runs(eval_runs, eval_append ? std::ios::app : std::ios::trunc);
            if (!runs) throw Failure{"evaluate: cannot write " + eval_runs};
            for (auto d : directions) {
                ffae_eval_run run{};
                check(ffae_evaluate(model.get(), corpus.get(), protocol, d, eval_m, seed, eval_rerank, &run), "evaluate");
                std::printf("%s %s  R@1 %.2f  R@5 %.2f  R@10 %.2f  mean %.2f", eval_protocol.c_str(),
                            d == FFAE_I2T ? "i2t" : "t2i", run.recall_at_1, run.recall_at_5, run.recall_at_10,
                            run.mean);
                if (protocol == FFAE_PROTOCOL_RANDOM_M) std::printf("  M=%zu", run.m);
                if (run.clamped_queries)
                    std::printf("  (warning: %zu queries had fewer than M same-category items)", run.clamped_queries);
                std::printf("\n");
                runs << json_of(run) << '\n';
            }
        } else if (*grad) {
            const auto seed = resolve_seed(grad_seed);
            std::vector<std::string> tasks;
            if (grad_task == "all") tasks = {"aetp", "apir", "itc", "mlm", "itm"};
            else tasks = {grad_task};
            double worst = 0.0;
            for (const auto& t : tasks) {
                double err = 0.0;
                check(ffae_gradcheck(t.c_str(), seed, grad_coords, grad_desk ? 1 : 0, &err), "gradcheck");
                std::printf("%-4s max relative error %.3e\n", t.c_str(), err);
                worst = std::max(worst, err);
            }
            std::printf("max relative error %.3e\n", worst);
            return worst < 1e-3 ? 0 : 1;
        } else if (*rep) {
            std::vector<ffae_eval_run> runs;
            std::ifstream in(rep_runs);
            if (!in) throw Failure{"report: cannot read " + rep_runs};
            for (std::string line; std::getline(in, line);) {
                if (line.empty()) continue;
                ffae_eval_run run{};
                check(ffae_eval_run_from_json(line.c_str(), &run), "report");
                runs.push_back(run);
            }
            std::vector<const char*> logs;
            for (const auto& l : rep_logs) logs.push_back(l.c_str());
            check(ffae_report(rep_out.c_str(), runs.data(), runs.size(), logs.data(), logs.size()), "report");
            std::printf("%zu runs -> %s\n", runs.size(), rep_out.c_str());
        }
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s\n", f.message.c_str());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
