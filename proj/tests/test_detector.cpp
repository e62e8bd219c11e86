#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "semharq/detector.hpp"
#include "semharq/knowledge_base.hpp"
#include "semharq/metrics.hpp"

using namespace semharq;

namespace {

DetectorConfig small_config(std::size_t vocab, std::size_t max_len) {
    DetectorConfig cfg;
    cfg.vocab_size = vocab;
    cfg.max_len = max_len;
    cfg.embed_dim = 16;
    cfg.heads = 4;
    return cfg;
}

double auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    double wins = 0.0;
    for (double p : pos) {
        for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

}  // namespace

TEST_CASE("detector: fixed three-layer depth and bounded deterministic output") {
    const auto& fixture = fixtures::TrainedSmallCodec::instance();
    DetectorConfig cfg = small_config(fixture.corpus.vocab.size(), fixture.cfg.max_len);
    const DetectorNet net(cfg, 3);

    DetectorConfig bad = cfg;
    bad.layers = 2;
    CHECK_THROWS_AS(DetectorNet(bad, 3), std::invalid_argument);

    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        Sentence s;
        s.ids.resize(cfg.max_len);
        for (int& id : s.ids) id = static_cast<int>(rng.uniform_index(cfg.vocab_size));
        s.true_length = cfg.max_len;
        const double p = net.detect_confidence(s);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(net.detect_confidence(s) == p);
    }
}

TEST_CASE("feedback_decision: strict threshold semantics") {
    CHECK(feedback_decision(0.99, 0.5) == Feedback::Ack);
    CHECK(feedback_decision(0.5, 0.5) == Feedback::Nack);  // boundary is NACK
    CHECK(feedback_decision(0.0, 0.0) == Feedback::Nack);
    CHECK(feedback_decision(1.0, 0.0) == Feedback::Ack);
    CHECK_THROWS_AS(feedback_decision(0.5, 1.5), std::invalid_argument);

    // sweep over a lambda grid matches the brute-force comparison
    Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        const double p = rng.uniform();
        const double lambda = rng.uniform();
        const bool ack = feedback_decision(p, lambda) == Feedback::Ack;
        CHECK(ack == (p > lambda));
    }
}

TEST_CASE("feedback_decision: monotone in p_hat, anti-monotone in lambda") {
    const double grid[] = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0};
    for (double lambda : grid) {
        bool seen_ack = false;
        for (double p : grid) {
            const bool ack = feedback_decision(p, lambda) == Feedback::Ack;
            if (seen_ack) CHECK(ack);  // once ACK, larger p stays ACK
            seen_ack = seen_ack || ack;
        }
    }
    for (double p : grid) {
        bool seen_nack = false;
        for (double lambda : grid) {
            const bool nack = feedback_decision(p, lambda) == Feedback::Nack;
            if (seen_nack) CHECK(nack);  // once NACK, larger lambda stays NACK
            seen_nack = seen_nack || nack;
        }
    }
}

TEST_CASE("train_detector: single-class K3 is a training error") {
    const auto& fixture = fixtures::TrainedSmallCodec::instance();
    DetectorNet net(small_config(fixture.corpus.vocab.size(), fixture.cfg.max_len), 5);
    std::vector<KbSampleK3> k3;
    for (int i = 0; i < 8; ++i) k3.push_back({fixture.sentences[i], 1});
    DetectorTrainOptions opts;
    CHECK_THROWS_AS(train_detector(net, k3, opts), TrainError);
    CHECK_THROWS_AS(train_detector(net, {}, opts), TrainError);
}

TEST_CASE("train_detector: learns to separate clean from corrupted sentences") {
    const auto& fixture = fixtures::TrainedSmallCodec::instance();
    // The fixture codec is trained on a clean channel, so probe for an AWGN
    // level that corrupts some but not all transmissions.
    ChannelConfig chan = fixtures::awgn_channel(12.0);
    bool found = false;
    for (double snr : {16.0, 14.0, 12.0, 10.0, 8.0, 6.0, 4.0}) {
        chan.snr_db = snr;
        const LocalKnowledgeBase probe =
            generate_kb(*fixture.model, chan, fixture.sentences, 120, 98);
        std::size_t bad = 0;
        for (const auto& s : probe.k3) bad += s.label == 0 ? 1 : 0;
        if (bad >= 20 && bad <= 100) {
            found = true;
            break;
        }
    }
    REQUIRE(found);

    const LocalKnowledgeBase kb =
        generate_kb(*fixture.model, chan, fixture.sentences, 1500, 99);
    std::size_t abnormal = 0;
    for (const auto& s : kb.k3) abnormal += s.label == 0 ? 1 : 0;
    REQUIRE(abnormal > 100);
    REQUIRE(abnormal < 1400);

    std::vector<KbSampleK3> train(kb.k3.begin(), kb.k3.begin() + 1200);
    std::vector<KbSampleK3> held(kb.k3.begin() + 1200, kb.k3.end());

    DetectorNet net(small_config(fixture.corpus.vocab.size(), fixture.cfg.max_len), 6);
    DetectorTrainOptions opts{25, 32, 2e-3, 7};
    const auto losses = train_detector(net, train, opts);
    CHECK(losses.back() < losses.front());

    std::vector<double> pos, neg;
    for (const auto& s : held) {
        (s.label == 1 ? pos : neg).push_back(net.detect_confidence(s.decoded));
    }
    REQUIRE(!pos.empty());
    REQUIRE(!neg.empty());
    CHECK(auc(pos, neg) > 0.8);

    // confusion metrics via the metrics module match brute-force counting
    std::vector<int> truth, pred;
    for (const auto& s : held) {
        truth.push_back(s.label);
        pred.push_back(feedback_decision(net.detect_confidence(s.decoded), 0.5) == Feedback::Ack
                           ? 1
                           : 0);
    }
    const ConfusionCounts counts = count_confusion(truth, pred);
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        tp += (truth[i] && pred[i]) ? 1 : 0;
        tn += (!truth[i] && !pred[i]) ? 1 : 0;
        fp += (!truth[i] && pred[i]) ? 1 : 0;
        fn += (truth[i] && !pred[i]) ? 1 : 0;
    }
    CHECK(counts.tp == tp);
    CHECK(counts.tn == tn);
    CHECK(counts.fp == fp);
    CHECK(counts.fn == fn);
}

TEST_CASE("train_detector: fixed seed reproduces the loss history") {
    const auto& fixture = fixtures::TrainedSmallCodec::instance();
    std::vector<KbSampleK3> k3;
    Rng rng(17);
    for (int i = 0; i < 40; ++i) {
        Sentence s = fixture.sentences[i % fixture.sentences.size()];
        const int label = static_cast<int>(rng.uniform_index(2));
        if (label == 0) s.ids[0] = static_cast<int>(rng.uniform_index(fixture.corpus.vocab.size()));
        k3.push_back({s, label});
    }
    DetectorTrainOptions opts{3, 8, 1e-3, 19};
    DetectorNet n1(small_config(fixture.corpus.vocab.size(), fixture.cfg.max_len), 21);
    DetectorNet n2(small_config(fixture.corpus.vocab.size(), fixture.cfg.max_len), 21);
    CHECK(train_detector(n1, k3, opts) == train_detector(n2, k3, opts));
}
