#include "semharq/metrics.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <stdexcept>

namespace semharq {

void BleuConfig::validate() const {
    if (max_n == 0 || weights.size() != max_n) {
        throw std::invalid_argument("bleu: weights must cover 1..max_n");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("bleu: negative n-gram weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("bleu: weights must sum to 1");
}

namespace {

std::vector<int> strip_pads(const Sentence& s) {
    std::vector<int> out;
    out.reserve(s.ids.size());
    for (int id : s.ids) {
        if (id != 0) out.push_back(id);  // pad id is 0 by construction
    }
    return out;
}

using NgramCounts = std::map<std::vector<int>, std::size_t>;

NgramCounts count_ngrams(const std::vector<int>& tokens, std::size_t n) {
    NgramCounts counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[std::vector<int>(tokens.begin() + i, tokens.begin() + i + n)];
    }
    return counts;
}

}  // namespace

double bleu(const Sentence& reference, const Sentence& candidate, const BleuConfig& cfg) {
    cfg.validate();
    const std::vector<int> ref = strip_pads(reference);
    const std::vector<int> cand = strip_pads(candidate);
    if (cand.empty() || ref.empty()) return 0.0;

    const double ls = static_cast<double>(ref.size());
    const double lc = static_cast<double>(cand.size());
    double log_bleu = std::min(1.0 - ls / lc, 0.0);

    for (std::size_t n = 1; n <= cfg.max_n; ++n) {
        const double un = cfg.weights[n - 1];
        if (un == 0.0) continue;
        const NgramCounts cand_counts = count_ngrams(cand, n);
        const NgramCounts ref_counts = count_ngrams(ref, n);
        std::size_t clipped = 0, total = 0;
        for (const auto& [gram, count] : cand_counts) {
            auto it = ref_counts.find(gram);
            const std::size_t ref_count = it == ref_counts.end() ? 0 : it->second;
            clipped += std::min(count, ref_count);
            total += count;
        }
        if (total == 0 || clipped == 0) return 0.0;  // log singularity -> limit value
        log_bleu += un * std::log(static_cast<double>(clipped) / static_cast<double>(total));
    }
    return std::exp(log_bleu);
}

SimilarityEmbedder::SimilarityEmbedder(std::shared_ptr<const CodecModel> encoder_model)
    : model_(std::move(encoder_model)) {
    if (!model_) throw std::invalid_argument("similarity: null encoder model");
}

std::vector<double> SimilarityEmbedder::embed(const Sentence& sentence) const {
    return model_->encoder_embedding(sentence);
}

double SimilarityEmbedder::similarity(const Sentence& a, const Sentence& b) const {
    const auto ea = embed(a);
    const auto eb = embed(b);
    const double na = std::sqrt(dot(ea, ea)), nb = std::sqrt(dot(eb, eb));
    if (na == 0.0 || nb == 0.0) {
        std::cerr << "semharq: warning: zero-norm sentence embedding, similarity set to 0\n";
        return 0.0;
    }
    return dot(ea, eb) / (na * nb);
}

double sentence_similarity(const Sentence& a, const Sentence& b, const SimilarityEmbedder& emb) {
    return emb.similarity(a, b);
}

ConfusionCounts count_confusion(const std::vector<int>& truth, const std::vector<int>& pred) {
    if (truth.size() != pred.size()) throw std::invalid_argument("confusion: length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] && pred[i]) ++c.tp;
        else if (!truth[i] && !pred[i]) ++c.tn;
        else if (!truth[i] && pred[i]) ++c.fp;
        else ++c.fn;
    }
    return c;
}

double accuracy(const ConfusionCounts& counts) {
    if (counts.total() == 0) throw std::invalid_argument("accuracy: empty evaluation set");
    return static_cast<double>(counts.tp + counts.tn) / static_cast<double>(counts.total());
}

double recall(const ConfusionCounts& counts) {
    if (counts.tp + counts.fn == 0) throw std::invalid_argument("recall: no positive samples");
    return static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
}

}  // namespace semharq
