#include "semharq/harq.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace semharq {

const char* variant_name(HarqVariant v) {
    switch (v) {
        case HarqVariant::NoHarq: return "noharq";
        case HarqVariant::TypeI: return "harq-i";
        case HarqVariant::WcFc: return "wc-fc";
        case HarqVariant::WcDc: return "wc-dc";
        case HarqVariant::Sc: return "sc";
    }
    return "?";
}

const char* rule_name(const HarqScheme& s) {
    if (!s.uses_combining()) return "none";
    return s.rule == CombineRule::Weighted ? "weighted" : "equal";
}

namespace {

std::vector<double> combining_weights(std::size_t m, const std::vector<double>& confidences) {
    // Uniform confidences (the all-zero fallback included) reduce to exact
    // 1/m weights so that weighted and equal combining agree bit-for-bit.
    bool uniform = true;
    for (std::size_t i = 1; i < m; ++i) {
        if (confidences[i] != confidences[0]) {
            uniform = false;
            break;
        }
    }
    std::vector<double> weights(m);
    if (uniform) {
        const double w = 1.0 / static_cast<double>(m);
        for (double& v : weights) v = w;
        return weights;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (confidences[i] < 0.0) {
            throw std::invalid_argument("combine_weighted: negative confidence");
        }
        sum += confidences[i];
    }
    for (std::size_t i = 0; i < m; ++i) weights[i] = confidences[i] / sum;
    return weights;
}

Tensor combine_items(const std::vector<Tensor>& items, const std::vector<double>& weights) {
    Tensor out(items[0].shape);
    for (std::size_t i = 0; i < items.size(); ++i) {
        const double a = weights[i];
        for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] += a * items[i].data[j];
    }
    return out;
}

}  // namespace

Tensor combine_weighted(const std::vector<Tensor>& items, const std::vector<double>& confidences) {
    if (items.empty()) throw std::invalid_argument("combine_weighted: empty item list");
    if (items.size() != confidences.size()) {
        throw std::invalid_argument("combine_weighted: item/confidence count mismatch");
    }
    for (std::size_t i = 1; i < items.size(); ++i) {
        if (!items[i].same_shape(items[0])) {
            throw std::invalid_argument("combine_weighted: heterogeneous item shapes");
        }
    }
    return combine_items(items, combining_weights(items.size(), confidences));
}

Tensor combine_equal(const std::vector<Tensor>& items) {
    if (items.empty()) throw std::invalid_argument("combine_equal: empty item list");
    return combine_weighted(items, std::vector<double>(items.size(), 1.0));
}

WordDistribution combine_decision(const std::vector<WordDistribution>& dists,
                                  const std::vector<double>& confidences, CombineRule rule) {
    if (dists.empty()) throw std::invalid_argument("combine_decision: empty distribution list");
    std::vector<Tensor> items;
    items.reserve(dists.size());
    for (const auto& d : dists) items.push_back(d.probs);
    Tensor combined = rule == CombineRule::Weighted
                          ? combine_weighted(items, confidences)
                          : combine_equal(items);
    // Guard renormalization against accumulated drift.
    const std::size_t rows = combined.rows(), cols = combined.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) sum += combined.at(r, c);
        if (sum <= 0.0) throw std::invalid_argument("combine_decision: non-positive row sum");
        for (std::size_t c = 0; c < cols; ++c) combined.at(r, c) /= sum;
    }
    return WordDistribution{combined};
}

Sentence synonym_map(const Sentence& sentence, std::size_t m, std::size_t M,
                     const SynonymTable& table) {
    if (m < 1 || m > M) throw std::invalid_argument("synonym_map: retransmission index out of range");
    Sentence out = sentence;
    const std::size_t lp = sentence.true_length;
    const auto segment_end = [&](std::size_t k) -> std::size_t {
        return (lp * k + M - 1) / M;  // ceil(L'k/M)
    };
    const std::size_t lo = segment_end(m - 1);  // exclusive
    const std::size_t hi = segment_end(m);      // inclusive
    for (std::size_t pos = lo + 1; pos <= hi; ++pos) {
        const int word = sentence.ids[pos - 1];
        const std::vector<int> synonyms = synonyms_of(word, table);
        const std::size_t j = synonyms.size() - 1;  // J_i
        if (j >= 1) out.ids[pos - 1] = synonyms[(m - 1) % j + 1];
    }
    return out;
}

SessionResult run_session(const Sentence& sentence, const HarqScheme& scheme,
                          const SessionModels& models, const ChannelConfig& channel,
                          std::size_t max_rounds, double lambda, std::uint64_t seed,
                          const SynonymTable* table) {
    if (models.codec == nullptr) throw std::invalid_argument("run_session: codec missing");
    if (max_rounds < 1) throw std::invalid_argument("run_session: max_rounds must be >= 1");
    if (scheme.variant != HarqVariant::NoHarq && models.detector == nullptr) {
        throw std::invalid_argument("run_session: detector missing");
    }
    if (scheme.variant == HarqVariant::Sc && table == nullptr) {
        throw std::invalid_argument("run_session: synonym table missing for sem-HARQ-SC");
    }
    channel.validate();

    const CodecModel& codec = *models.codec;
    const double noise_var = noise_variance_from_snr(channel.snr_db);
    const std::size_t n_symbols = codec.config().frame_symbols();
    // Synonym segments are spread over the retransmission budget so that
    // the whole sentence gains redundancy by round M.
    const std::size_t map_rounds = std::max<std::size_t>(max_rounds - 1, 1);

    SessionResult result;
    std::vector<Tensor> frame_buffer;
    std::vector<WordDistribution> dist_buffer;
    std::vector<double> confidences;

    for (std::size_t round = 1; round <= max_rounds; ++round) {
        Sentence tx = sentence;
        if (scheme.variant == HarqVariant::Sc && round >= 2) {
            tx = synonym_map(sentence, round - 1, map_rounds, *table);
        }
        const SemanticFrame sent = codec.encode(tx);
        Rng round_rng(mix_seed(seed, round));
        const ChannelRealization real = sample_channel(channel, n_symbols, round_rng);
        const SemanticFrame received{apply_channel(sent.features, real, noise_var)};

        ReconstructorMode mode =
            scheme.variant == HarqVariant::NoHarq ? ReconstructorMode::Off : models.recon_mode;
        const SemanticFrame corrected = reconstruct_with_mode(
            received, models.discriminator, models.generator, models.gate_threshold, mode);

        Sentence decoded;
        switch (scheme.variant) {
            case HarqVariant::NoHarq:
            case HarqVariant::TypeI: {
                decoded = greedy_decode(codec.decode_distribution(corrected), 0);
                break;
            }
            case HarqVariant::WcFc:
            case HarqVariant::Sc: {
                const Sentence independent =
                    greedy_decode(codec.decode_distribution(corrected), 0);
                confidences.push_back(models.detector->detect_confidence(independent));
                frame_buffer.push_back(corrected.features);
                const Tensor combined = scheme.rule == CombineRule::Weighted
                                            ? combine_weighted(frame_buffer, confidences)
                                            : combine_equal(frame_buffer);
                decoded = greedy_decode(codec.decode_distribution(SemanticFrame{combined}), 0);
                break;
            }
            case HarqVariant::WcDc: {
                const WordDistribution dist = codec.decode_distribution(corrected);
                const Sentence independent = greedy_decode(dist, 0);
                confidences.push_back(models.detector->detect_confidence(independent));
                dist_buffer.push_back(dist);
                decoded = greedy_decode(combine_decision(dist_buffer, confidences, scheme.rule), 0);
                break;
            }
        }

        result.decoded = decoded;
        result.rounds_used = round;
        result.buffered_rounds = frame_buffer.size() + dist_buffer.size();

        if (scheme.variant == HarqVariant::NoHarq) {
            result.p_hat_final = std::numeric_limits<double>::quiet_NaN();
            result.trace.push_back({round, result.p_hat_final, bleu(sentence, decoded)});
            result.outcome = SessionOutcome::Exhausted;
            return result;
        }

        const double p_hat = models.detector->detect_confidence(decoded);
        result.p_hat_final = p_hat;
        result.trace.push_back({round, p_hat, bleu(sentence, decoded)});
        if (feedback_decision(p_hat, lambda) == Feedback::Ack) {
            result.outcome = SessionOutcome::Ack;
            return result;
        }
    }
    result.outcome = SessionOutcome::Exhausted;
    return result;
}

}  // namespace semharq
