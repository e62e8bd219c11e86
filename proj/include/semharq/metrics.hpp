#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "semharq/codec.hpp"
#include "semharq/corpus.hpp"

namespace semharq {

struct BleuConfig {
    std::size_t max_n = 1;
    std::vector<double> weights = {1.0};  // u_n, sums to 1; default 1-gram only

    void validate() const;
};

/// BLEU per the paper's form: log BLEU = min(1 - l_s/l_shat, 0)
/// + sum_n u_n log f_n with clipped n-gram precision f_n. Any weighted
/// f_n = 0 yields BLEU = 0; pads are stripped before counting and an
/// empty candidate scores 0.
double bleu(const Sentence& reference, const Sentence& candidate, const BleuConfig& cfg = {});

/// Frozen sentence embedder substituting for the paper's BERT: the
/// average-pooled encoder-stack output of a separately trained codec
/// copy. Similarity is the cosine of the two embeddings; zero-norm
/// embeddings score 0 (with a warning on stderr).
class SimilarityEmbedder {
public:
    explicit SimilarityEmbedder(std::shared_ptr<const CodecModel> encoder_model);

    std::vector<double> embed(const Sentence& sentence) const;
    double similarity(const Sentence& a, const Sentence& b) const;

private:
    std::shared_ptr<const CodecModel> model_;
};

double sentence_similarity(const Sentence& a, const Sentence& b, const SimilarityEmbedder& emb);

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
};

/// truth/pred hold 0/1 flags; positive = semantically correct (ACK).
ConfusionCounts count_confusion(const std::vector<int>& truth, const std::vector<int>& pred);

double accuracy(const ConfusionCounts& counts);  // (TP+TN)/total, throws on empty
double recall(const ConfusionCounts& counts);    // TP/(TP+FN), throws without positives

}  // namespace semharq
