#pragma once

#include <limits>
#include <memory>

#include "semharq/codec.hpp"
#include "semharq/corpus.hpp"

namespace fixtures {

inline semharq::ChannelConfig identity_channel() {
    semharq::ChannelConfig c;
    c.n_paths = 1;
    c.power_profile = {1.0};
    c.rho = 1.0;
    c.snr_db = std::numeric_limits<double>::infinity();
    c.fading = false;
    return c;
}

inline semharq::ChannelConfig awgn_channel(double snr_db) {
    semharq::ChannelConfig c = identity_channel();
    c.snr_db = snr_db;
    return c;
}

/// Small trained codec shared by the suites that need realistic frames.
/// Trained once per process.
struct TrainedSmallCodec {
    semharq::SyntheticCorpus corpus;
    semharq::CodecConfig cfg;
    std::vector<semharq::Sentence> sentences;
    std::shared_ptr<semharq::CodecModel> model;

    TrainedSmallCodec() {
        corpus = semharq::generate_synthetic_corpus(7, 48, 4, 8);
        cfg.vocab_size = corpus.vocab.size();
        cfg.max_len = 8;
        cfg.embed_dim = 16;
        cfg.feature_dim = 16;
        cfg.layers = 1;
        cfg.heads = 4;
        for (const auto& line : corpus.sentences) {
            sentences.push_back(semharq::tokenize_and_pad(line, corpus.vocab, cfg.max_len));
        }
        model = std::make_shared<semharq::CodecModel>(cfg, 29);
        semharq::CodecTrainOptions opts;
        opts.epochs = 140;
        opts.batch_size = 8;
        opts.learning_rate = 2e-3;
        opts.seed = 31;
        opts.channel = identity_channel();
        semharq::train_codec(*model, sentences, opts);
    }

    static const TrainedSmallCodec& instance() {
        static TrainedSmallCodec fixture;
        return fixture;
    }
};

}  // namespace fixtures
