#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "semharq/knowledge_base.hpp"

using namespace semharq;

TEST_CASE("labeling rule: BLEU exactly 0.9 is normal, below is abnormal") {
    CHECK(kb_label(0.9) == 1);
    CHECK(kb_label(0.9 - 1e-12) == 0);
    CHECK(kb_label(1.0) == 1);
    CHECK(kb_label(0.0) == 0);
}

TEST_CASE("generate_kb: identity channel yields all-normal labels and empty K2") {
    const auto& fixture = fixtures::TrainedSmallCodec::instance();
    const LocalKnowledgeBase kb = generate_kb(*fixture.model, fixtures::identity_channel(),
                                              fixture.sentences, 200, 1);
    CHECK(kb.k1.size() == 200);
    CHECK(kb.k3.size() == 200);
    CHECK(kb.k2.empty());
    for (const auto& s : kb.k1) CHECK(s.label == 1);
    for (const auto& s : kb.k3) CHECK(s.label == 1);
}

TEST_CASE("generate_kb: lower SNR produces more abnormal samples") {
    const auto& fixture = fixtures::TrainedSmallCodec::instance();
    const auto fraction_bad = [&](double snr) {
        ChannelConfig chan = fixtures::awgn_channel(snr);
        const LocalKnowledgeBase kb =
            generate_kb(*fixture.model, chan, fixture.sentences, 400, 7);
        std::size_t bad = 0;
        for (const auto& s : kb.k1) bad += s.label == 0 ? 1 : 0;
        return static_cast<double>(bad) / static_cast<double>(kb.k1.size());
    };
    CHECK(fraction_bad(-10.0) > fraction_bad(10.0));
}

TEST_CASE("generate_kb: label consistency across K1, K2 membership and K3") {
    const auto& fixture = fixtures::TrainedSmallCodec::instance();
    ChannelConfig chan = fixtures::awgn_channel(8.0);
    const LocalKnowledgeBase kb = generate_kb(*fixture.model, chan, fixture.sentences, 300, 11);
    REQUIRE(kb.k1.size() == kb.k3.size());
    std::size_t abnormal = 0;
    for (std::size_t i = 0; i < kb.k1.size(); ++i) {
        CHECK(kb.k1[i].label == kb.k3[i].label);
        abnormal += kb.k1[i].label == 0 ? 1 : 0;
    }
    CHECK(kb.k2.size() == abnormal);
}

TEST_CASE("generate_kb: reproducible from seed and config, input validation") {
    const auto& fixture = fixtures::TrainedSmallCodec::instance();
    ChannelConfig chan = fixtures::awgn_channel(6.0);
    const LocalKnowledgeBase a = generate_kb(*fixture.model, chan, fixture.sentences, 50, 13);
    const LocalKnowledgeBase b = generate_kb(*fixture.model, chan, fixture.sentences, 50, 13);
    REQUIRE(a.k1.size() == b.k1.size());
    for (std::size_t i = 0; i < a.k1.size(); ++i) {
        CHECK(a.k1[i].received_frame.data == b.k1[i].received_frame.data);
        CHECK(a.k1[i].label == b.k1[i].label);
        CHECK(a.k3[i].decoded == b.k3[i].decoded);
    }
    CHECK_THROWS_AS(generate_kb(*fixture.model, chan, fixture.sentences, 0, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_kb(*fixture.model, chan, {}, 10, 1), std::invalid_argument);
}

TEST_CASE("kb file: round trip preserves samples and metadata") {
    const auto& fixture = fixtures::TrainedSmallCodec::instance();
    ChannelConfig chan = fixtures::awgn_channel(4.0);
    const LocalKnowledgeBase kb = generate_kb(*fixture.model, chan, fixture.sentences, 120, 17);
    const std::string path = "kb_tmp.kb";
    save_kb(path, kb);
    const LocalKnowledgeBase loaded = load_kb(path);
    CHECK(loaded.meta.snr_db == kb.meta.snr_db);
    CHECK(loaded.meta.seed == kb.meta.seed);
    CHECK(loaded.meta.n_transmissions == kb.meta.n_transmissions);
    REQUIRE(loaded.k1.size() == kb.k1.size());
    REQUIRE(loaded.k2.size() == kb.k2.size());
    REQUIRE(loaded.k3.size() == kb.k3.size());
    for (std::size_t i = 0; i < kb.k1.size(); ++i) {
        CHECK(loaded.k1[i].label == kb.k1[i].label);
        for (std::size_t j = 0; j < kb.k1[i].received_frame.size(); ++j) {
            CHECK(static_cast<float>(loaded.k1[i].received_frame.data[j]) ==
                  static_cast<float>(kb.k1[i].received_frame.data[j]));
        }
    }
    for (std::size_t i = 0; i < kb.k3.size(); ++i) {
        CHECK(loaded.k3[i].decoded == kb.k3[i].decoded);
        CHECK(loaded.k3[i].label == kb.k3[i].label);
    }
    std::filesystem::remove(path);
}

TEST_CASE("epoch sampler: distinct indices per batch, exact cover per epoch") {
    EpochSampler sampler(20, 5);
    std::set<std::size_t> seen;
    for (int b = 0; b < 4; ++b) {
        const auto batch = sampler.next_batch(5);
        CHECK(batch.size() == 5);
        for (std::size_t idx : batch) {
            CHECK(idx < 20);
            CHECK(!seen.count(idx));  // within-epoch: no repeats
            seen.insert(idx);
        }
    }
    CHECK(seen.size() == 20);  // full epoch covered exactly once

    CHECK_THROWS_AS(sampler.next_batch(21), std::invalid_argument);
    CHECK_THROWS_AS(EpochSampler(0, 1), std::invalid_argument);
}

TEST_CASE("epoch sampler: deterministic batch sequence for a fixed seed") {
    EpochSampler a(33, 9), b(33, 9);
    for (int i = 0; i < 10; ++i) CHECK(a.next_batch(7) == b.next_batch(7));
    const auto one = sample_minibatch(10, 4, 3);
    CHECK(one == sample_minibatch(10, 4, 3));
    CHECK(one.size() == 4);
}
