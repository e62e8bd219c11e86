#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semharq/channel.hpp"
#include "semharq/codec.hpp"
#include "semharq/corpus.hpp"
#include "semharq/metrics.hpp"

namespace semharq {

struct KbSampleK1 {
    Tensor received_frame;  // y-hat
    int label = 0;          // C: 1 iff BLEU >= 0.9
};

struct KbSampleK2 {
    Tensor clean_frame;      // y as extracted by the transmitter
    Tensor corrupted_frame;  // y-hat, stored only when C = 0
};

struct KbSampleK3 {
    Sentence decoded;  // S-hat
    int label = 0;
};

struct KbMetadata {
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    std::size_t n_transmissions = 0;
};

struct LocalKnowledgeBase {
    std::vector<KbSampleK1> k1;
    std::vector<KbSampleK2> k2;
    std::vector<KbSampleK3> k3;
    KbMetadata meta;
};

inline constexpr const char* kKbMagic = "SEMHARQ-KB-1";
inline constexpr double kKbBleuThreshold = 0.9;

/// Labeling rule: scores below 0.9 are abnormal (C = 0); exactly 0.9 is
/// normal (C = 1).
inline int kb_label(double bleu_score) { return bleu_score < kKbBleuThreshold ? 0 : 1; }

/// Simulated transmissions through the trained codec and the configured
/// channel: encode, fade, decode, score. Labels follow the 0.9-BLEU rule
/// (a score of exactly 0.9 is labeled 1); K2 keeps (clean, corrupted)
/// pairs for failed transmissions only.
LocalKnowledgeBase generate_kb(const CodecModel& codec, const ChannelConfig& channel,
                               const std::vector<Sentence>& corpus, std::size_t n_transmissions,
                               std::uint64_t seed, const BleuConfig& bleu_cfg = {});

/// Uniform sampling without replacement within an epoch; indices reshuffle
/// at every epoch boundary.
class EpochSampler {
public:
    EpochSampler(std::size_t n, std::uint64_t seed);
    std::vector<std::size_t> next_batch(std::size_t batch_size);

private:
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    Rng rng_;
};

/// Single-batch convenience matching the one-shot op signature.
std::vector<std::size_t> sample_minibatch(std::size_t part_size, std::size_t batch_size,
                                          std::uint64_t seed);

void save_kb(const std::string& path, const LocalKnowledgeBase& kb);
LocalKnowledgeBase load_kb(const std::string& path);

}  // namespace semharq
