#include <doctest.h>

#include <ffae/ffae.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
    const auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    return d;
}

ffae_run_config* small_config(const char* steps) {
    ffae_run_config* cfg = nullptr;
    REQUIRE(ffae_run_config_create("desk", &cfg) == FFAE_OK);
    for (const auto& [k, v] : std::vector<std::pair<const char*, const char*>>{{"embed_dim", "16"},
                                                                               {"n_layers_text_fusion", "2"},
                                                                               {"split_point", "1"},
                                                                               {"n_layers_image", "1"},
                                                                               {"n_heads", "2"},
                                                                               {"mlp_hidden", "32"},
                                                                               {"batch_size", "4"},
                                                                               {"seed", "3"},
                                                                               {"steps", steps}})
        REQUIRE(ffae_run_config_set(cfg, k, v) == FFAE_OK);
    return cfg;
}

}  // namespace

TEST_CASE("errors come back as status codes with a message") {
    ffae_corpus* c = nullptr;
    CHECK(ffae_corpus_generate(10, 4, 1, nullptr) == FFAE_ERR_INVALID_ARGUMENT);
    CHECK(ffae_corpus_load("/nonexistent/ffae/corpus", &c) != FFAE_OK);
    CHECK(c == nullptr);
    CHECK(std::strlen(ffae_last_error()) > 0);
    CHECK(std::string(ffae_status_name(FFAE_ERR_IO)) == "i/o error");

    ffae_run_config* cfg = nullptr;
    CHECK(ffae_run_config_create("laptop", &cfg) == FFAE_ERR_INVALID_ARGUMENT);
    REQUIRE(ffae_run_config_create("desk", &cfg) == FFAE_OK);
    CHECK(ffae_run_config_set(cfg, "no_such_key", "1") == FFAE_ERR_INVALID_ARGUMENT);
    CHECK(std::string(ffae_last_error()).find("no_such_key") != std::string::npos);
    ffae_run_config_free(cfg);

    double err = 0;
    CHECK(ffae_gradcheck("itx", 0, 1, 0, &err) == FFAE_ERR_INVALID_ARGUMENT);
    ffae_corpus_free(nullptr);
    ffae_model_free(nullptr);
}

TEST_CASE("config text uses the two-call size protocol") {
    ffae_run_config* cfg = nullptr;
    REQUIRE(ffae_run_config_create("paper", &cfg) == FFAE_OK);
    size_t needed = 0;
    CHECK(ffae_run_config_to_text(cfg, nullptr, 0, &needed) == FFAE_OK);
    REQUIRE(needed > 1);
    std::string buf(needed + 1, '\0');
    CHECK(ffae_run_config_to_text(cfg, buf.data(), buf.size(), &needed) == FFAE_OK);
    CHECK(buf.size() == needed + 1);
    CHECK(buf.back() == '\0');
    CHECK(buf.find("lr=1.0000000000000001e-05") != std::string::npos);
    CHECK(buf.find("batch_size=128") != std::string::npos);
    ffae_run_config_free(cfg);
}

TEST_CASE("generate, tokenize, pretrain, evaluate and fine-tune through the C API") {
    const auto dir = fresh_dir("ffae_capi_test");
    ffae_corpus* corpus = nullptr;
    REQUIRE(ffae_corpus_generate(12, 3, 5, &corpus) == FFAE_OK);
    CHECK(ffae_corpus_size(corpus) == 12);
    REQUIRE(ffae_corpus_save(corpus, (dir / "corpus").c_str()) == FFAE_OK);
    ffae_corpus* again = nullptr;
    REQUIRE(ffae_corpus_load((dir / "corpus").c_str(), &again) == FFAE_OK);
    CHECK(ffae_corpus_vocab_size(again) == ffae_corpus_vocab_size(corpus));

    ffae_codebook* cb = nullptr;
    REQUIRE(ffae_codebook_train(corpus, 8, 5, 8, 1, &cb) == FFAE_OK);
    CHECK(ffae_codebook_size(cb) == 8);
    REQUIRE(ffae_codebook_save(cb, (dir / "codebook.bin").c_str()) == FFAE_OK);

    auto* cfg = small_config("6");
    std::vector<std::string> seen;
    auto progress = [](size_t, const char* task, double loss, void* user) {
        CHECK(loss == loss);
        static_cast<std::vector<std::string>*>(user)->push_back(task);
    };
    ffae_model* model = nullptr;
    REQUIRE(ffae_pretrain(cfg, again, cb, (dir / "run").c_str(), nullptr, progress, &seen, &model) == FFAE_OK);
    CHECK(seen.size() == 6);
    CHECK(ffae_model_parameter_count(model) > 0);
    CHECK(fs::exists(dir / "run" / "loss.csv"));

    ffae_model* loaded = nullptr;
    REQUIRE(ffae_model_load((dir / "run").c_str(), &loaded) == FFAE_OK);
    CHECK(ffae_model_parameter_count(loaded) == ffae_model_parameter_count(model));

    ffae_eval_run run{};
    REQUIRE(ffae_evaluate(loaded, again, FFAE_PROTOCOL_RANDOM_M, FFAE_T2I, 100, 9, 0, &run) == FFAE_OK);
    CHECK(run.m == 100);
    CHECK(run.clamped_queries == 12);
    CHECK(run.recall_at_1 <= run.recall_at_5);
    CHECK(run.recall_at_5 <= run.recall_at_10);
    size_t needed = 0;
    REQUIRE(ffae_eval_run_to_json(&run, nullptr, 0, &needed) == FFAE_OK);
    std::string json(needed + 1, '\0');
    REQUIRE(ffae_eval_run_to_json(&run, json.data(), json.size(), &needed) == FFAE_OK);
    ffae_eval_run back{};
    REQUIRE(ffae_eval_run_from_json(json.c_str(), &back) == FFAE_OK);
    CHECK(back.m == 100);
    CHECK(back.direction == FFAE_T2I);
    CHECK(back.recall_at_1 == run.recall_at_1);

    ffae_eval_run full{};
    REQUIRE(ffae_evaluate(loaded, again, FFAE_PROTOCOL_FULL, FFAE_I2T, 0, 0, 3, &full) == FFAE_OK);
    CHECK(full.m == 12);

    const std::string log = (dir / "run" / "loss.csv").string();
    const char* logs[] = {log.c_str()};
    const ffae_eval_run runs[] = {run, full};
    REQUIRE(ffae_report((dir / "report").c_str(), runs, 2, logs, 1) == FFAE_OK);
    CHECK(fs::exists(dir / "report" / "metrics.csv"));

    auto opts = ffae_finetune_defaults();
    opts.steps = 3;
    opts.freeze_backbone = 1;
    ffae_classification_result res{};
    REQUIRE(ffae_finetune(loaded, again, &opts, &res) == FFAE_OK);
    CHECK(res.num_classes == 3);
    CHECK(res.num_items == 12);
    opts.label_field = "season";
    CHECK(ffae_finetune(loaded, again, &opts, &res) == FFAE_ERR_INVALID_ARGUMENT);

    ffae_corpus* other = nullptr;
    REQUIRE(ffae_corpus_generate(12, 5, 99, &other) == FFAE_OK);
    if (ffae_corpus_vocab_size(other) != ffae_corpus_vocab_size(corpus))
        CHECK(ffae_evaluate(loaded, other, FFAE_PROTOCOL_FULL, FFAE_I2T, 0, 0, 0, &full) != FFAE_OK);

    ffae_corpus_free(other);
    ffae_model_free(loaded);
    ffae_model_free(model);
    ffae_run_config_free(cfg);
    ffae_codebook_free(cb);
    ffae_corpus_free(again);
    ffae_corpus_free(corpus);
    fs::remove_all(dir);
}

TEST_CASE("gradcheck entry point") {
    double err = 1;
    REQUIRE(ffae_gradcheck("mlm", 1, 2, 0, &err) == FFAE_OK);
    CHECK(err < 1e-3);
}
