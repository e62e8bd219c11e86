#include "semharq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "semharq/checkpoint.hpp"

namespace semharq {

namespace fs = std::filesystem;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string snr_tag(double snr_db) {
    std::string s = format_double(snr_db);
    for (char& c : s) {
        if (c == '-') c = 'm';
        if (c == '.') c = 'p';
    }
    return s;
}

CodecConfig ExperimentConfig::codec_config(std::size_t vocab_size) const {
    CodecConfig c;
    c.vocab_size = vocab_size;
    c.max_len = max_len;
    c.embed_dim = embed_dim;
    c.feature_dim = feature_dim;
    c.layers = codec_layers;
    c.heads = codec_heads;
    return c;
}

DetectorConfig ExperimentConfig::detector_config(std::size_t vocab_size) const {
    DetectorConfig c;
    c.vocab_size = vocab_size;
    c.max_len = max_len;
    c.embed_dim = embed_dim;
    c.heads = codec_heads;
    return c;
}

ReconstructorMode ExperimentConfig::reconstructor_mode() const {
    if (recon_mode == "full") return ReconstructorMode::Full;
    if (recon_mode == "off") return ReconstructorMode::Off;
    if (recon_mode == "generator_only") return ReconstructorMode::GeneratorOnly;
    throw ConfigError("reconstructor.mode must be full|off|generator_only, got " + recon_mode);
}

void ExperimentConfig::validate() const {
    if (profile != "desk" && profile != "paper") {
        throw ConfigError("profile must be desk or paper");
    }
    if (snr_list.empty()) throw ConfigError("channel.snr_list must be nonempty");
    if (schemes.empty()) throw ConfigError("harq.schemes must be nonempty");
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("detector.lambda must be in [0,1]");
    reconstructor_mode();
    if (feature_dim % 8 != 0) {
        throw ConfigError("codec.feature_dim must be a multiple of 8 (discriminator widths)");
    }
    if (corpus_len_max > max_len) throw ConfigError("corpus.len_max exceeds codec.max_len");
    if (corpus_len_min < 3 || corpus_len_min > corpus_len_max) {
        throw ConfigError("corpus length range must satisfy 3 <= min <= max");
    }
    if (corpus_sentences == 0 || corpus_eval_sentences == 0) {
        throw ConfigError("corpus sizes must be positive");
    }
    if (sweep_sentences == 0 || sweep_sentences > corpus_eval_sentences) {
        throw ConfigError("sweep.sentences must be in [1, corpus.eval_sentences]");
    }
    if (max_rounds == 0) throw ConfigError("harq.max_rounds must be >= 1");
    if (threads == 0) throw ConfigError("runtime.threads must be >= 1");
    try {
        channel.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig default_config(std::uint64_t master_seed) {
    ExperimentConfig cfg;
    cfg.corpus_seed = mix_seed(master_seed, 1);
    cfg.codec_seed = mix_seed(master_seed, 2);
    cfg.embedder_seed = mix_seed(master_seed, 3);
    cfg.recon_seed = mix_seed(master_seed, 4);
    cfg.detector_seed = mix_seed(master_seed, 5);
    cfg.kb_seed = mix_seed(master_seed, 6);
    cfg.sweep_seed = mix_seed(master_seed, 7);
    cfg.channel.seed = mix_seed(master_seed, 8);
    cfg.schemes = {
        parse_scheme("noharq"),       parse_scheme("harq-i"),    parse_scheme("wc-fc:weighted"),
        parse_scheme("wc-fc:equal"),  parse_scheme("wc-dc:weighted"), parse_scheme("sc:weighted"),
    };
    return cfg;
}

HarqScheme parse_scheme(const std::string& token) {
    std::string name = token, rule;
    if (auto pos = token.find(':'); pos != std::string::npos) {
        name = token.substr(0, pos);
        rule = token.substr(pos + 1);
    }
    HarqScheme s;
    if (name == "noharq") s.variant = HarqVariant::NoHarq;
    else if (name == "harq-i" || name == "i") s.variant = HarqVariant::TypeI;
    else if (name == "wc-fc") s.variant = HarqVariant::WcFc;
    else if (name == "wc-dc") s.variant = HarqVariant::WcDc;
    else if (name == "sc") s.variant = HarqVariant::Sc;
    else throw ConfigError("unknown HARQ scheme: " + token);
    if (!rule.empty()) {
        if (!s.uses_combining()) throw ConfigError("scheme " + name + " takes no combine rule");
        if (rule == "weighted") s.rule = CombineRule::Weighted;
        else if (rule == "equal") s.rule = CombineRule::Equal;
        else throw ConfigError("unknown combine rule: " + rule);
    }
    return s;
}

std::string scheme_label(const HarqScheme& scheme) { return variant_name(scheme.variant); }

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    if (v == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for " + key + ": '" + v + "'");
    }
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long n = std::stoll(v, &used);
        if (used != v.size() || n < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw ConfigError("invalid integer for " + key + ": '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const unsigned long long n = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("invalid seed for " + key + ": '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("invalid boolean for " + key + ": '" + v + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::string body = trim(value);
    if (!body.empty() && body.front() == '[') {
        if (body.back() != ']') throw ConfigError("unterminated list: " + value);
        body = body.substr(1, body.size() - 2);
    }
    std::vector<std::string> items;
    std::string item;
    std::istringstream is(body);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(parse_double(key, item));
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
}

void derive_seeds(ExperimentConfig& cfg, std::uint64_t master) {
    cfg.corpus_seed = mix_seed(master, 1);
    cfg.codec_seed = mix_seed(master, 2);
    cfg.embedder_seed = mix_seed(master, 3);
    cfg.recon_seed = mix_seed(master, 4);
    cfg.detector_seed = mix_seed(master, 5);
    cfg.kb_seed = mix_seed(master, 6);
    cfg.sweep_seed = mix_seed(master, 7);
    cfg.channel.seed = mix_seed(master, 8);
}

void apply_profile(ExperimentConfig& cfg, const std::string& value) {
    if (value == "desk") {
        cfg.profile = "desk";
        return;
    }
    if (value == "paper") {
        cfg.profile = "paper";
        cfg.max_len = 30;
        cfg.feature_dim = 128;
        cfg.embed_dim = 16;
        cfg.codec_layers = 3;
        cfg.codec_heads = 8;
        cfg.codec_lr = 1e-4;
        cfg.corpus_len_min = 4;
        cfg.corpus_len_max = 30;
        return;
    }
    throw ConfigError("profile must be desk or paper, got " + value);
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "profile") { apply_profile(cfg, value); return; }
    if (key == "seed") { derive_seeds(cfg, parse_u64(key, value)); return; }

    if (key == "corpus.sentences") cfg.corpus_sentences = parse_size(key, value);
    else if (key == "corpus.eval_sentences") cfg.corpus_eval_sentences = parse_size(key, value);
    else if (key == "corpus.len_min") cfg.corpus_len_min = parse_size(key, value);
    else if (key == "corpus.len_max") cfg.corpus_len_max = parse_size(key, value);
    else if (key == "corpus.seed") cfg.corpus_seed = parse_u64(key, value);
    else if (key == "corpus.file") cfg.corpus_file = value;
    else if (key == "corpus.eval_file") cfg.corpus_eval_file = value;
    else if (key == "corpus.synonyms_file") cfg.synonyms_file = value;
    else if (key == "codec.max_len") cfg.max_len = parse_size(key, value);
    else if (key == "codec.embed_dim") cfg.embed_dim = parse_size(key, value);
    else if (key == "codec.feature_dim") cfg.feature_dim = parse_size(key, value);
    else if (key == "codec.layers") cfg.codec_layers = parse_size(key, value);
    else if (key == "codec.heads") cfg.codec_heads = parse_size(key, value);
    else if (key == "codec.epochs") cfg.codec_epochs = parse_size(key, value);
    else if (key == "codec.batch") cfg.codec_batch = parse_size(key, value);
    else if (key == "codec.lr") cfg.codec_lr = parse_double(key, value);
    else if (key == "codec.train_snr_db") cfg.codec_train_snr_db = parse_double(key, value);
    else if (key == "codec.seed") cfg.codec_seed = parse_u64(key, value);
    else if (key == "embedder.epochs") cfg.embedder_epochs = parse_size(key, value);
    else if (key == "embedder.seed") cfg.embedder_seed = parse_u64(key, value);
    else if (key == "channel.paths") {
        cfg.channel.n_paths = parse_size(key, value);
    } else if (key == "channel.profile") {
        cfg.channel.power_profile = parse_double_list(key, value);
    } else if (key == "channel.rho") {
        cfg.channel.rho = parse_double(key, value);
    } else if (key == "channel.snr_db") {
        cfg.channel.snr_db = parse_double(key, value);
    } else if (key == "channel.snr_list") {
        cfg.snr_list = parse_double_list(key, value);
    } else if (key == "channel.seed") {
        cfg.channel.seed = parse_u64(key, value);
    } else if (key == "channel.fading") {
        cfg.channel.fading = parse_bool(key, value);
    }
    else if (key == "reconstructor.mode") cfg.recon_mode = value;
    else if (key == "reconstructor.threshold") cfg.recon_threshold = parse_double(key, value);
    else if (key == "reconstructor.disc_epochs") cfg.disc_epochs = parse_size(key, value);
    else if (key == "reconstructor.gen_epochs") cfg.gen_epochs = parse_size(key, value);
    else if (key == "reconstructor.batch") cfg.recon_batch = parse_size(key, value);
    else if (key == "reconstructor.lr") cfg.recon_lr = parse_double(key, value);
    else if (key == "reconstructor.seed") cfg.recon_seed = parse_u64(key, value);
    else if (key == "detector.lambda") cfg.lambda = parse_double(key, value);
    else if (key == "detector.epochs") cfg.detector_epochs = parse_size(key, value);
    else if (key == "detector.batch") cfg.detector_batch = parse_size(key, value);
    else if (key == "detector.lr") cfg.detector_lr = parse_double(key, value);
    else if (key == "detector.seed") cfg.detector_seed = parse_u64(key, value);
    else if (key == "kb.transmissions") cfg.kb_transmissions = parse_size(key, value);
    else if (key == "kb.seed") cfg.kb_seed = parse_u64(key, value);
    else if (key == "harq.max_rounds") cfg.max_rounds = parse_size(key, value);
    else if (key == "harq.schemes") {
        cfg.schemes.clear();
        for (const auto& tok : split_list(value)) cfg.schemes.push_back(parse_scheme(tok));
    }
    else if (key == "sweep.sentences") cfg.sweep_sentences = parse_size(key, value);
    else if (key == "sweep.seed") cfg.sweep_seed = parse_u64(key, value);
    else if (key == "runtime.threads") cfg.threads = parse_size(key, value);
    else if (key == "out.dir") cfg.out_dir = value;
    else throw ConfigError("unknown config key: " + key);
}

std::vector<std::pair<std::string, std::string>> tokenize_config(
    const std::vector<std::string>& lines) {
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& raw : lines) {
        std::string line = raw;
        if (auto pos = line.find('#'); pos != std::string::npos) line = line.substr(0, pos);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed config line: " + raw);
        kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
}

}  // namespace

ExperimentConfig parse_config_lines(const std::vector<std::string>& lines) {
    const auto kv = tokenize_config(lines);
    ExperimentConfig cfg = default_config();
    // profile and master seed first, remaining keys in file order
    for (const auto& [k, v] : kv) {
        if (k == "profile") apply_profile(cfg, v);
    }
    for (const auto& [k, v] : kv) {
        if (k == "seed") derive_seeds(cfg, parse_u64(k, v));
    }
    for (const auto& [k, v] : kv) {
        if (k != "profile" && k != "seed") apply_key(cfg, k, v);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    return parse_config_lines(lines);
}

void apply_override(ExperimentConfig& cfg, const std::string& key_equals_value) {
    const auto eq = key_equals_value.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override must be key=value: " + key_equals_value);
    }
    apply_key(cfg, trim(key_equals_value.substr(0, eq)), trim(key_equals_value.substr(eq + 1)));
}

namespace {

std::vector<Sentence> tokenize_lines(const std::vector<std::string>& lines,
                                     const Vocabulary& vocab, std::size_t max_len) {
    std::vector<Sentence> out;
    out.reserve(lines.size());
    for (const auto& line : lines) out.push_back(tokenize_and_pad(line, vocab, max_len));
    return out;
}

void log_stage(const std::string& msg) { std::cout << "[semharq] " << msg << std::endl; }

}  // namespace

PipelineArtifacts run_corpus_stage(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const std::string train_path = cfg.out_dir + "/corpus_train.txt";
    const std::string eval_path = cfg.out_dir + "/corpus_eval.txt";
    const std::string syn_path = cfg.out_dir + "/synonyms.txt";

    PipelineArtifacts art;
    if (fs::exists(train_path) && fs::exists(eval_path) && fs::exists(syn_path)) {
        log_stage("corpus: reusing " + train_path);
        art.train_lines = load_corpus_lines(train_path);
        art.eval_lines = load_corpus_lines(eval_path);
        std::vector<std::string> all = art.train_lines;
        all.insert(all.end(), art.eval_lines.begin(), art.eval_lines.end());
        art.vocab = build_vocabulary(all);
        art.table = load_synonym_table(syn_path, art.vocab);
    } else if (!cfg.corpus_file.empty()) {
        log_stage("corpus: ingesting " + cfg.corpus_file);
        auto lines = load_corpus_lines(cfg.corpus_file);
        if (!cfg.corpus_eval_file.empty()) {
            art.train_lines = std::move(lines);
            art.eval_lines = load_corpus_lines(cfg.corpus_eval_file);
        } else {
            if (lines.size() <= cfg.corpus_eval_sentences) {
                throw ConfigError("ingested corpus too small for the eval split");
            }
            art.eval_lines.assign(lines.end() - static_cast<std::ptrdiff_t>(cfg.corpus_eval_sentences),
                                  lines.end());
            lines.resize(lines.size() - cfg.corpus_eval_sentences);
            art.train_lines = std::move(lines);
        }
        std::vector<std::string> all = art.train_lines;
        all.insert(all.end(), art.eval_lines.begin(), art.eval_lines.end());
        art.vocab = build_vocabulary(all);
        art.table = cfg.synonyms_file.empty() ? SynonymTable{}
                                              : load_synonym_table(cfg.synonyms_file, art.vocab);
        save_corpus_lines(train_path, art.train_lines);
        save_corpus_lines(eval_path, art.eval_lines);
        save_synonym_table(syn_path, art.table, art.vocab);
    } else {
        log_stage("corpus: generating synthetic corpus");
        const std::size_t total = cfg.corpus_sentences + cfg.corpus_eval_sentences;
        SyntheticCorpus corpus = generate_synthetic_corpus(cfg.corpus_seed, total,
                                                           cfg.corpus_len_min, cfg.corpus_len_max);
        art.train_lines.assign(corpus.sentences.begin(),
                               corpus.sentences.begin() + static_cast<std::ptrdiff_t>(cfg.corpus_sentences));
        art.eval_lines.assign(corpus.sentences.begin() + static_cast<std::ptrdiff_t>(cfg.corpus_sentences),
                              corpus.sentences.end());
        art.vocab = corpus.vocab;
        art.table = corpus.table;
        save_corpus_lines(train_path, art.train_lines);
        save_corpus_lines(eval_path, art.eval_lines);
        save_synonym_table(syn_path, art.table, art.vocab);
    }
    art.train_sentences = tokenize_lines(art.train_lines, art.vocab, cfg.max_len);
    art.eval_sentences = tokenize_lines(art.eval_lines, art.vocab, cfg.max_len);
    log_stage("corpus: " + std::to_string(art.train_sentences.size()) + " train / " +
              std::to_string(art.eval_sentences.size()) + " eval sentences, vocabulary " +
              std::to_string(art.vocab.size()));
    return art;
}

void run_codec_stage(const ExperimentConfig& cfg, PipelineArtifacts& art) {
    const std::string codec_path = cfg.out_dir + "/codec.ckpt";
    const std::string embedder_path = cfg.out_dir + "/embedder.ckpt";

    art.codec = std::make_shared<CodecModel>(cfg.codec_config(art.vocab.size()), cfg.codec_seed);
    if (fs::exists(codec_path)) {
        log_stage("codec: reusing " + codec_path);
    } else {
        log_stage("codec: training (" + std::to_string(cfg.codec_epochs) + " epochs)");
        CodecTrainOptions opts;
        opts.epochs = cfg.codec_epochs;
        opts.batch_size = cfg.codec_batch;
        opts.learning_rate = cfg.codec_lr;
        opts.seed = cfg.codec_seed;
        opts.channel = cfg.channel;
        opts.channel.snr_db = cfg.codec_train_snr_db;
        const auto losses = train_codec(*art.codec, art.train_sentences, opts);
        log_stage("codec: loss " + format_double(losses.front()) + " -> " +
                  format_double(losses.back()));
        save_checkpoint(codec_path, art.codec->parameters());
    }
    load_checkpoint(codec_path, art.codec->parameters());

    auto embedder_model =
        std::make_shared<CodecModel>(cfg.codec_config(art.vocab.size()), cfg.embedder_seed);
    if (fs::exists(embedder_path)) {
        log_stage("embedder: reusing " + embedder_path);
    } else {
        log_stage("embedder: training encoder copy on clean text");
        CodecTrainOptions opts;
        opts.epochs = cfg.embedder_epochs;
        opts.batch_size = cfg.codec_batch;
        opts.learning_rate = cfg.codec_lr;
        opts.seed = cfg.embedder_seed;
        opts.channel = ChannelConfig{1, {1.0}, std::numeric_limits<double>::infinity(), 1.0, 0,
                                     false};
        train_codec(*embedder_model, art.train_sentences, opts);
        save_checkpoint(embedder_path, embedder_model->parameters());
    }
    load_checkpoint(embedder_path, embedder_model->parameters());
    art.embedder_model = embedder_model;
    art.embedder = std::make_shared<SimilarityEmbedder>(art.embedder_model);
}

void run_kb_stage(const ExperimentConfig& cfg, PipelineArtifacts& art) {
    for (std::size_t si = 0; si < cfg.snr_list.size(); ++si) {
        const double snr = cfg.snr_list[si];
        const std::string kb_path = cfg.out_dir + "/kb_snr" + snr_tag(snr) + ".kb";
        if (fs::exists(kb_path)) {
            log_stage("kb: reusing " + kb_path);
            continue;
        }
        ChannelConfig chan = cfg.channel;
        chan.snr_db = snr;
        log_stage("kb: generating " + std::to_string(cfg.kb_transmissions) + " transmissions at " +
                  format_double(snr) + " dB");
        const LocalKnowledgeBase kb = generate_kb(*art.codec, chan, art.train_sentences,
                                                  cfg.kb_transmissions, mix_seed(cfg.kb_seed, si));
        std::size_t errors = 0;
        for (const auto& s : kb.k1) errors += s.label == 0 ? 1 : 0;
        log_stage("kb: " + std::to_string(errors) + "/" + std::to_string(kb.k1.size()) +
                  " semantic errors");
        save_kb(kb_path, kb);
    }
}

void run_module_stage(const ExperimentConfig& cfg, PipelineArtifacts& art) {
    art.buckets.clear();
    for (std::size_t si = 0; si < cfg.snr_list.size(); ++si) {
        const double snr = cfg.snr_list[si];
        const std::string tag = snr_tag(snr);
        const std::string kb_path = cfg.out_dir + "/kb_snr" + tag + ".kb";
        const std::string disc_path = cfg.out_dir + "/disc_snr" + tag + ".ckpt";
        const std::string gen_path = cfg.out_dir + "/gen_snr" + tag + ".ckpt";
        const std::string det_path = cfg.out_dir + "/det_snr" + tag + ".ckpt";

        SnrBucket bucket;
        bucket.snr_db = snr;
        bucket.discriminator =
            std::make_shared<DiscriminatorNet>(cfg.feature_dim, mix_seed(cfg.recon_seed, 2 * si));
        bucket.generator =
            std::make_shared<GeneratorNet>(cfg.feature_dim, mix_seed(cfg.recon_seed, 2 * si + 1));
        bucket.detector = std::make_shared<DetectorNet>(cfg.detector_config(art.vocab.size()),
                                                        mix_seed(cfg.detector_seed, si));

        const bool need_training =
            !fs::exists(disc_path) || !fs::exists(gen_path) || !fs::exists(det_path);
        if (need_training) {
            const LocalKnowledgeBase kb = load_kb(kb_path);
            if (!fs::exists(disc_path)) {
                log_stage("modules: training discriminator @ " + tag + " dB");
                ReconTrainOptions opts{cfg.disc_epochs, cfg.recon_batch, cfg.recon_lr,
                                       mix_seed(cfg.recon_seed, 100 + si)};
                train_discriminator(*bucket.discriminator, kb.k1, opts);
                save_checkpoint(disc_path, bucket.discriminator->parameters());
            }
            if (!fs::exists(gen_path)) {
                log_stage("modules: training generator @ " + tag + " dB (" +
                          std::to_string(kb.k2.size()) + " pairs)");
                ReconTrainOptions opts{cfg.gen_epochs, cfg.recon_batch, cfg.recon_lr,
                                       mix_seed(cfg.recon_seed, 200 + si)};
                train_generator(*bucket.generator, kb.k2, opts);
                save_checkpoint(gen_path, bucket.generator->parameters());
            }
            if (!fs::exists(det_path)) {
                log_stage("modules: training detector @ " + tag + " dB");
                DetectorTrainOptions opts{cfg.detector_epochs, cfg.detector_batch, cfg.detector_lr,
                                          mix_seed(cfg.detector_seed, 300 + si)};
                train_detector(*bucket.detector, kb.k3, opts);
                save_checkpoint(det_path, bucket.detector->parameters());
            }
        } else {
            log_stage("modules: reusing checkpoints @ " + tag + " dB");
        }
        load_checkpoint(disc_path, bucket.discriminator->parameters());
        load_checkpoint(gen_path, bucket.generator->parameters());
        load_checkpoint(det_path, bucket.detector->parameters());
        art.buckets.push_back(std::move(bucket));
    }
}

PipelineArtifacts pipeline_prepare(const ExperimentConfig& cfg) {
    cfg.validate();
    PipelineArtifacts art = run_corpus_stage(cfg);
    run_codec_stage(cfg, art);
    run_kb_stage(cfg, art);
    run_module_stage(cfg, art);
    return art;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, const PipelineArtifacts& art) {
    cfg.validate();
    if (!art.codec || !art.embedder || art.buckets.size() != cfg.snr_list.size()) {
        throw ConfigError("run_sweep: pipeline artifacts missing (train first)");
    }
    const std::size_t n_sentences = cfg.sweep_sentences;
    const std::size_t n_snr = cfg.snr_list.size();
    const std::size_t n_schemes = cfg.schemes.size();
    const std::size_t total = n_sentences * n_snr * n_schemes;
    std::vector<ResultRow> rows(total);

    const ReconstructorMode mode = cfg.reconstructor_mode();
    std::atomic<std::size_t> cursor{0};
    const std::size_t block = 8;
    const std::size_t n_threads = std::min<std::size_t>(cfg.threads, total);

    auto worker = [&]() {
        for (;;) {
            const std::size_t start = cursor.fetch_add(block);
            if (start >= total) return;
            const std::size_t end = std::min(total, start + block);
            for (std::size_t flat = start; flat < end; ++flat) {
                const std::size_t scheme_i = flat / (n_snr * n_sentences);
                const std::size_t snr_i = (flat / n_sentences) % n_snr;
                const std::size_t sent_i = flat % n_sentences;

                const HarqScheme& scheme = cfg.schemes[scheme_i];
                const SnrBucket& bucket = art.buckets[snr_i];
                const Sentence& ref = art.eval_sentences[sent_i];

                ChannelConfig chan = cfg.channel;
                chan.snr_db = cfg.snr_list[snr_i];
                SessionModels models;
                models.codec = art.codec.get();
                models.discriminator = bucket.discriminator.get();
                models.generator = bucket.generator.get();
                models.detector = bucket.detector.get();
                models.recon_mode = mode;
                models.gate_threshold = cfg.recon_threshold;

                // Paired randomness: the seed depends on (snr, sentence)
                // only, so every scheme sees identical per-round channels.
                const std::uint64_t seed = mix_seed(mix_seed(cfg.sweep_seed, snr_i), sent_i);
                const SessionResult res = run_session(ref, scheme, models, chan, cfg.max_rounds,
                                                      cfg.lambda, seed, &art.table);

                ResultRow& row = rows[flat];
                row.scheme = scheme_label(scheme);
                row.combine_rule = rule_name(scheme);
                row.snr_db = cfg.snr_list[snr_i];
                row.sentence_id = sent_i;
                row.rounds_used = res.rounds_used;
                row.outcome = res.outcome == SessionOutcome::Ack ? "ack" : "exhausted";
                row.bleu = bleu(ref, res.decoded);
                row.similarity = art.embedder->similarity(ref, res.decoded);
                row.p_hat_final = res.p_hat_final;
                row.seed = seed;
            }
        }
    };

    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

void pipeline(const ExperimentConfig& cfg) {
    PipelineArtifacts art = pipeline_prepare(cfg);
    log_stage("sweep: " + std::to_string(cfg.sweep_sentences) + " sentences x " +
              std::to_string(cfg.snr_list.size()) + " SNR points x " +
              std::to_string(cfg.schemes.size()) + " schemes");
    const auto rows = run_sweep(cfg, art);
    emit_csv(rows, cfg.out_dir + "/results.csv");
    emit_summary_csv(summarize(rows), cfg.out_dir + "/summary.csv");
    log_stage("pipeline: wrote " + cfg.out_dir + "/results.csv");
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    std::vector<SummaryRow> out;
    auto find = [&](const ResultRow& r) -> SummaryRow& {
        for (auto& s : out) {
            if (s.scheme == r.scheme && s.combine_rule == r.combine_rule && s.snr_db == r.snr_db) {
                return s;
            }
        }
        out.push_back(SummaryRow{r.scheme, r.combine_rule, r.snr_db, 0, 0.0, 0.0, 0.0});
        return out.back();
    };
    for (const auto& r : rows) {
        SummaryRow& s = find(r);
        s.n += 1;
        s.mean_bleu += r.bleu;
        s.mean_similarity += r.similarity;
        s.mean_rounds += static_cast<double>(r.rounds_used);
    }
    for (auto& s : out) {
        s.mean_bleu /= static_cast<double>(s.n);
        s.mean_similarity /= static_cast<double>(s.n);
        s.mean_rounds /= static_cast<double>(s.n);
    }
    return out;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "scheme,combine_rule,snr_db,sentence_id,rounds_used,outcome,bleu,similarity,"
          "p_hat_final,seed\n";
    for (const auto& r : rows) {
        os << r.scheme << ',' << r.combine_rule << ',' << format_double(r.snr_db) << ','
           << r.sentence_id << ',' << r.rounds_used << ',' << r.outcome << ','
           << format_double(r.bleu) << ',' << format_double(r.similarity) << ','
           << format_double(r.p_hat_final) << ',' << r.seed << "\n";
    }
    if (!os) throw IoError("write failed: " + path);
}

std::vector<ResultRow> parse_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty csv: " + path);
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) f.push_back(field);
        if (f.size() != 10) throw IoError("malformed csv row: " + line);
        ResultRow r;
        r.scheme = f[0];
        r.combine_rule = f[1];
        r.snr_db = std::stod(f[2]);
        r.sentence_id = std::stoull(f[3]);
        r.rounds_used = std::stoull(f[4]);
        r.outcome = f[5];
        r.bleu = std::stod(f[6]);
        r.similarity = std::stod(f[7]);
        r.p_hat_final = std::stod(f[8]);
        r.seed = std::stoull(f[9]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void emit_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "scheme,combine_rule,snr_db,n,mean_bleu,mean_similarity,mean_rounds\n";
    for (const auto& s : rows) {
        os << s.scheme << ',' << s.combine_rule << ',' << format_double(s.snr_db) << ',' << s.n
           << ',' << format_double(s.mean_bleu) << ',' << format_double(s.mean_similarity) << ','
           << format_double(s.mean_rounds) << "\n";
    }
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace semharq
