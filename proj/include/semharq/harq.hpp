#pragma once

#include <cstdint>
#include <vector>

#include "semharq/channel.hpp"
#include "semharq/codec.hpp"
#include "semharq/corpus.hpp"
#include "semharq/detector.hpp"
#include "semharq/metrics.hpp"
#include "semharq/reconstructor.hpp"

namespace semharq {

enum class HarqVariant { NoHarq, TypeI, WcFc, WcDc, Sc };
enum class CombineRule { Weighted, Equal };

struct HarqScheme {
    HarqVariant variant = HarqVariant::NoHarq;
    CombineRule rule = CombineRule::Weighted;  // meaningful for WC/SC only

    bool uses_combining() const {
        return variant == HarqVariant::WcFc || variant == HarqVariant::WcDc ||
               variant == HarqVariant::Sc;
    }
};

const char* variant_name(HarqVariant v);
const char* rule_name(const HarqScheme& s);  // "none" when the rule does not apply

/// Confidence-weighted combining: a_i = p_i / sum_k p_k. Uniform
/// confidences (including the all-zero degenerate case) reduce to exact
/// equal weights.
Tensor combine_weighted(const std::vector<Tensor>& items, const std::vector<double>& confidences);

/// Equal weighting a_i = 1/m; identical code path to combine_weighted
/// with unit confidences.
Tensor combine_equal(const std::vector<Tensor>& items);

/// Row-wise convex combination of word distributions, rows renormalized
/// to sum 1 to guard against drift.
WordDistribution combine_decision(const std::vector<WordDistribution>& dists,
                                  const std::vector<double>& confidences, CombineRule rule);

/// Adaptive synonym replacement for retransmission m of M: 1-based
/// positions in (ceil(L'(m-1)/M), ceil(L'm/M)] are substituted with
/// synonym ((m-1) mod J_i)+1; words without alternatives and pads are
/// untouched. The segments partition 1..true_length over m = 1..M.
Sentence synonym_map(const Sentence& sentence, std::size_t m, std::size_t M,
                     const SynonymTable& table);

struct SessionModels {
    const CodecModel* codec = nullptr;
    const DiscriminatorNet* discriminator = nullptr;
    const GeneratorNet* generator = nullptr;
    const DetectorNet* detector = nullptr;
    ReconstructorMode recon_mode = ReconstructorMode::Full;
    double gate_threshold = 0.5;
};

enum class SessionOutcome { Pending, Ack, Exhausted };

struct RoundTrace {
    std::size_t round = 0;
    double p_hat = 0.0;
    double bleu_so_far = 0.0;
};

struct SessionResult {
    Sentence decoded;
    SessionOutcome outcome = SessionOutcome::Pending;
    std::size_t rounds_used = 0;
    double p_hat_final = 0.0;  // NaN for NoHarq (no detector in the baseline)
    std::size_t buffered_rounds = 0;
    std::vector<RoundTrace> trace;
};

/// One stop-and-wait session for a single sentence. Every round draws a
/// fresh channel realization from a seed derived from (seed, round), so
/// different schemes fed the same seed observe identical channels.
/// NoHarq is a single transmission without reconstruction or detection.
/// On exhaustion the best-effort output is the final round's (combined)
/// decoding. The feedback link is error-free and instantaneous.
SessionResult run_session(const Sentence& sentence, const HarqScheme& scheme,
                          const SessionModels& models, const ChannelConfig& channel,
                          std::size_t max_rounds, double lambda, std::uint64_t seed,
                          const SynonymTable* table = nullptr);

}  // namespace semharq
