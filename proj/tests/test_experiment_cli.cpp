#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "semharq/experiment.hpp"

using namespace semharq;
namespace fs = std::filesystem;

TEST_CASE("load_config: empty document keeps the desk defaults") {
    const ExperimentConfig cfg = parse_config_lines({});
    CHECK(cfg.profile == "desk");
    CHECK(cfg.max_len == 12);
    CHECK(cfg.embed_dim == 16);
    CHECK(cfg.feature_dim == 32);
    CHECK(cfg.codec_layers == 2);
    CHECK(cfg.snr_list.size() == 4);
    CHECK(cfg.schemes.size() == 6);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("load_config: paper profile populates the paper-scale geometry") {
    const ExperimentConfig cfg = parse_config_lines({"profile = paper"});
    CHECK(cfg.max_len == 30);
    CHECK(cfg.feature_dim == 128);
    CHECK(cfg.embed_dim == 16);
    CHECK(cfg.codec_layers == 3);
    CHECK(cfg.codec_heads == 8);
    CHECK(cfg.codec_lr == doctest::Approx(1e-4));
    // later keys still override the profile
    const ExperimentConfig cfg2 =
        parse_config_lines({"codec.max_len = 20", "profile = paper", "codec.layers = 5"});
    CHECK(cfg2.max_len == 20);
    CHECK(cfg2.codec_layers == 5);
}

TEST_CASE("load_config: snr list and scheme list parsing") {
    const ExperimentConfig cfg = parse_config_lines(
        {"channel.snr_list = [0,4,8,12]", "harq.schemes = noharq, wc-fc:equal, sc"});
    REQUIRE(cfg.snr_list.size() == 4);
    CHECK(cfg.snr_list[1] == doctest::Approx(4.0));
    REQUIRE(cfg.schemes.size() == 3);
    CHECK(cfg.schemes[0].variant == HarqVariant::NoHarq);
    CHECK(cfg.schemes[1].variant == HarqVariant::WcFc);
    CHECK(cfg.schemes[1].rule == CombineRule::Equal);
    CHECK(cfg.schemes[2].variant == HarqVariant::Sc);
    CHECK(cfg.schemes[2].rule == CombineRule::Weighted);
}

TEST_CASE("load_config: unknown keys and malformed values are rejected") {
    CHECK_THROWS_AS(parse_config_lines({"unknown.key = 3"}), ConfigError);
    CHECK_THROWS_AS(parse_config_lines({"codec.epochs = many"}), ConfigError);
    CHECK_THROWS_AS(parse_config_lines({"detector.lambda = 1.5"}).validate(), ConfigError);
    CHECK_THROWS_AS(parse_config_lines({"harq.schemes = noharq:weighted"}), ConfigError);
    CHECK_THROWS_AS(parse_config_lines({"channel.profile = [0.5, 0.4]"}).validate(), ConfigError);
    CHECK_THROWS_AS(parse_config_lines({"malformed line"}), ConfigError);
    CHECK_THROWS_AS(load_config("no_such_config_file.cfg"), ConfigError);
}

TEST_CASE("load_config: comments, whitespace and overrides") {
    ExperimentConfig cfg = parse_config_lines(
        {"# a comment", "", "  codec.epochs = 7  # trailing", "out.dir = runs/x"});
    CHECK(cfg.codec_epochs == 7);
    CHECK(cfg.out_dir == "runs/x");
    apply_override(cfg, "codec.epochs=9");
    CHECK(cfg.codec_epochs == 9);
    CHECK_THROWS_AS(apply_override(cfg, "codec.epochs"), ConfigError);
}

TEST_CASE("load_config: master seed derives all component seeds") {
    const ExperimentConfig a = parse_config_lines({"seed = 42"});
    const ExperimentConfig b = parse_config_lines({"seed = 42"});
    const ExperimentConfig c = parse_config_lines({"seed = 43"});
    CHECK(a.codec_seed == b.codec_seed);
    CHECK(a.sweep_seed == b.sweep_seed);
    CHECK(a.codec_seed != c.codec_seed);
    // explicit component seed wins over the derived one
    const ExperimentConfig d = parse_config_lines({"seed = 42", "codec.seed = 5"});
    CHECK(d.codec_seed == 5);
}

TEST_CASE("format_double: shortest round-trip representation") {
    for (double v : {0.0, 1.0, -4.25, 0.1, 1e-12, 3.141592653589793}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(snr_tag(-4.0) == "m4");
    CHECK(snr_tag(7.5) == "7p5");
    CHECK(snr_tag(0.0) == "0");
}

namespace {

std::vector<ResultRow> sample_rows() {
    std::vector<ResultRow> rows;
    Rng rng(5);
    for (int scheme = 0; scheme < 2; ++scheme) {
        for (int snr = 0; snr < 2; ++snr) {
            for (std::size_t id = 0; id < 5; ++id) {
                ResultRow r;
                r.scheme = scheme == 0 ? "noharq" : "wc-fc";
                r.combine_rule = scheme == 0 ? "none" : "weighted";
                r.snr_db = snr == 0 ? 0.0 : 12.0;
                r.sentence_id = id;
                r.rounds_used = 1 + rng.uniform_index(3);
                r.outcome = rng.uniform() < 0.5 ? "ack" : "exhausted";
                r.bleu = rng.uniform();
                r.similarity = rng.uniform(-1.0, 1.0);
                r.p_hat_final = scheme == 0 ? std::numeric_limits<double>::quiet_NaN()
                                            : rng.uniform();
                r.seed = rng.next_u64();
                rows.push_back(r);
            }
        }
    }
    return rows;
}

bool same_bits(double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return true;
    return a == b;
}

}  // namespace

TEST_CASE("emit_csv: header-only for zero rows, exact parse-back") {
    const std::string path = "rows_tmp.csv";
    emit_csv({}, path);
    {
        std::ifstream is(path);
        std::string line;
        REQUIRE(std::getline(is, line));
        CHECK(line ==
              "scheme,combine_rule,snr_db,sentence_id,rounds_used,outcome,bleu,similarity,"
              "p_hat_final,seed");
        CHECK(!std::getline(is, line));
    }
    const auto rows = sample_rows();
    emit_csv(rows, path);
    const auto parsed = parse_csv(path);
    REQUIRE(parsed.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(parsed[i].scheme == rows[i].scheme);
        CHECK(parsed[i].combine_rule == rows[i].combine_rule);
        CHECK(parsed[i].snr_db == rows[i].snr_db);
        CHECK(parsed[i].sentence_id == rows[i].sentence_id);
        CHECK(parsed[i].rounds_used == rows[i].rounds_used);
        CHECK(parsed[i].outcome == rows[i].outcome);
        CHECK(same_bits(parsed[i].bleu, rows[i].bleu));
        CHECK(same_bits(parsed[i].similarity, rows[i].similarity));
        CHECK(same_bits(parsed[i].p_hat_final, rows[i].p_hat_final));
        CHECK(parsed[i].seed == rows[i].seed);
    }
    fs::remove(path);
}

TEST_CASE("emit_csv: byte-stable across repeated writes") {
    const auto rows = sample_rows();
    emit_csv(rows, "rows_a.csv");
    emit_csv(rows, "rows_b.csv");
    std::ifstream a("rows_a.csv", std::ios::binary), b("rows_b.csv", std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(!sa.empty());
    fs::remove("rows_a.csv");
    fs::remove("rows_b.csv");
}

TEST_CASE("summarize: recomputed from a parsed CSV matches exactly") {
    const auto rows = sample_rows();
    const std::string path = "rows_sum_tmp.csv";
    emit_csv(rows, path);
    const auto memory = summarize(rows);
    const auto reparsed = summarize(parse_csv(path));
    REQUIRE(memory.size() == reparsed.size());
    for (std::size_t i = 0; i < memory.size(); ++i) {
        CHECK(memory[i].scheme == reparsed[i].scheme);
        CHECK(memory[i].combine_rule == reparsed[i].combine_rule);
        CHECK(memory[i].snr_db == reparsed[i].snr_db);
        CHECK(memory[i].n == reparsed[i].n);
        CHECK(memory[i].mean_bleu == reparsed[i].mean_bleu);              // exact
        CHECK(memory[i].mean_similarity == reparsed[i].mean_similarity);  // exact
        CHECK(memory[i].mean_rounds == reparsed[i].mean_rounds);
    }
    fs::remove(path);
}

TEST_CASE("corpus stage: artifacts resume to the identical corpus and vocabulary") {
    ExperimentConfig cfg = default_config(77);
    cfg.corpus_sentences = 40;
    cfg.corpus_eval_sentences = 24;
    cfg.corpus_len_max = 10;
    cfg.sweep_sentences = 24;
    cfg.out_dir = "stage_tmp";
    fs::remove_all(cfg.out_dir);
    const PipelineArtifacts first = run_corpus_stage(cfg);
    const PipelineArtifacts second = run_corpus_stage(cfg);  // resumes from files
    CHECK(first.train_lines == second.train_lines);
    CHECK(first.eval_lines == second.eval_lines);
    CHECK(first.vocab.tokens == second.vocab.tokens);
    CHECK(first.table.lists.size() == second.table.lists.size());
    for (const auto& [id, list] : first.table.lists) {
        CHECK(second.table.lists.at(id) == list);
    }
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("run_sweep: missing artifacts are a configuration error") {
    ExperimentConfig cfg = default_config(78);
    PipelineArtifacts empty;
    CHECK_THROWS_AS(run_sweep(cfg, empty), ConfigError);
}
