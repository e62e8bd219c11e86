#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "semharq/channel.hpp"
#include "semharq/codec.hpp"
#include "semharq/corpus.hpp"
#include "semharq/detector.hpp"
#include "semharq/harq.hpp"
#include "semharq/knowledge_base.hpp"
#include "semharq/metrics.hpp"
#include "semharq/reconstructor.hpp"

namespace semharq {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string profile = "desk";

    // corpus
    std::size_t corpus_sentences = 512;
    std::size_t corpus_eval_sentences = 1024;
    std::size_t corpus_len_min = 4;
    std::size_t corpus_len_max = 12;
    std::uint64_t corpus_seed = 0;
    std::string corpus_file;       // optional plain-text ingestion (one sentence per line)
    std::string corpus_eval_file;  // optional held-out text
    std::string synonyms_file;     // optional synonym classes (head word first)

    // codec
    std::size_t max_len = 12;      // L
    std::size_t embed_dim = 16;    // D
    std::size_t feature_dim = 32;  // V
    std::size_t codec_layers = 2;
    std::size_t codec_heads = 4;
    std::size_t codec_epochs = 120;
    std::size_t codec_batch = 16;
    double codec_lr = 1e-3;
    double codec_train_snr_db = 6.0;
    std::uint64_t codec_seed = 0;

    // similarity embedder (a separately trained encoder copy)
    std::size_t embedder_epochs = 40;
    std::uint64_t embedder_seed = 0;

    // channel
    ChannelConfig channel;
    std::vector<double> snr_list = {0.0, 6.0, 12.0, 18.0};

    // reconstructor
    std::string recon_mode = "full";  // full | off | generator_only
    double recon_threshold = 0.5;
    std::size_t disc_epochs = 10;
    std::size_t gen_epochs = 10;
    std::size_t recon_batch = 32;
    double recon_lr = 1e-3;
    std::uint64_t recon_seed = 0;

    // detector
    double lambda = 0.5;
    std::size_t detector_epochs = 12;
    std::size_t detector_batch = 32;
    double detector_lr = 1e-3;
    std::uint64_t detector_seed = 0;

    // knowledge base
    std::size_t kb_transmissions = 3000;
    std::uint64_t kb_seed = 0;

    // harq
    std::size_t max_rounds = 3;
    std::vector<HarqScheme> schemes;

    // sweep
    std::size_t sweep_sentences = 1024;
    std::uint64_t sweep_seed = 0;
    std::size_t threads = 2;
    std::string out_dir = "out";

    CodecConfig codec_config(std::size_t vocab_size) const;
    DetectorConfig detector_config(std::size_t vocab_size) const;
    ReconstructorMode reconstructor_mode() const;
    void validate() const;
};

/// Desk defaults with every component seed derived from the master seed.
ExperimentConfig default_config(std::uint64_t master_seed = 1234);

/// Flat key-value document (key = value, '#' comments). Unknown keys are
/// rejected; profile=paper switches to the paper-scale geometry before
/// the remaining keys apply.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_lines(const std::vector<std::string>& lines);
void apply_override(ExperimentConfig& cfg, const std::string& key_equals_value);

HarqScheme parse_scheme(const std::string& token);
std::string scheme_label(const HarqScheme& scheme);

struct ResultRow {
    std::string scheme;
    std::string combine_rule;
    double snr_db = 0.0;
    std::size_t sentence_id = 0;
    std::size_t rounds_used = 0;
    std::string outcome;
    double bleu = 0.0;
    double similarity = 0.0;
    double p_hat_final = 0.0;
    std::uint64_t seed = 0;
};

struct SummaryRow {
    std::string scheme;
    std::string combine_rule;
    double snr_db = 0.0;
    std::size_t n = 0;
    double mean_bleu = 0.0;
    double mean_similarity = 0.0;
    double mean_rounds = 0.0;
};

struct SnrBucket {
    double snr_db = 0.0;
    std::shared_ptr<DiscriminatorNet> discriminator;
    std::shared_ptr<GeneratorNet> generator;
    std::shared_ptr<DetectorNet> detector;
};

struct PipelineArtifacts {
    std::vector<std::string> train_lines, eval_lines;
    std::vector<Sentence> train_sentences, eval_sentences;
    Vocabulary vocab;
    SynonymTable table;
    std::shared_ptr<CodecModel> codec;
    std::shared_ptr<const CodecModel> embedder_model;
    std::shared_ptr<SimilarityEmbedder> embedder;
    std::vector<SnrBucket> buckets;  // aligned with snr_list
};

// Staged, artifact-resumable pipeline. Each stage skips itself when its
// files are present; trained weights are always reloaded from disk so a
// resumed run and a fresh run produce identical downstream bytes.
PipelineArtifacts run_corpus_stage(const ExperimentConfig& cfg);
void run_codec_stage(const ExperimentConfig& cfg, PipelineArtifacts& art);
void run_kb_stage(const ExperimentConfig& cfg, PipelineArtifacts& art);
void run_module_stage(const ExperimentConfig& cfg, PipelineArtifacts& art);
PipelineArtifacts pipeline_prepare(const ExperimentConfig& cfg);  // stages 1-4
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, const PipelineArtifacts& art);
void pipeline(const ExperimentConfig& cfg);  // stages 1-5 plus CSV emission

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> parse_csv(const std::string& path);
void emit_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);

std::string format_double(double v);  // shortest round-trip representation
std::string snr_tag(double snr_db);   // filename fragment for an SNR point

}  // namespace semharq
