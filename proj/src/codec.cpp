#include "semharq/codec.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace semharq {

double SemanticFrame::power() const {
    if (features.size() == 0) return 0.0;
    double s = 0.0;
    for (double v : features.data) s += v * v;
    return s / static_cast<double>(features.size());
}

void CodecConfig::validate() const {
    if (vocab_size < 4) throw std::invalid_argument("codec: vocabulary too small");
    if (feature_dim % 2 != 0) {
        throw std::invalid_argument("codec: feature_dim must be even (complex mapping)");
    }
    if (embed_dim % heads != 0) {
        throw std::invalid_argument("codec: embed_dim must be divisible by heads");
    }
    if (max_len == 0 || layers == 0) throw std::invalid_argument("codec: empty geometry");
}

CodecModel::CodecModel(CodecConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(mix_seed(seed, 0xC0DECu));
    embedding_ = params_.add(
        glorot_uniform({cfg_.vocab_size, cfg_.embed_dim}, cfg_.vocab_size, cfg_.embed_dim, rng),
        "embedding");
    for (std::size_t i = 0; i < cfg_.layers; ++i) {
        encoder_.emplace_back(params_, "enc" + std::to_string(i), cfg_.embed_dim, cfg_.heads,
                              cfg_.ff_hidden(), rng);
    }
    encoder_norm_ = LayerNorm(params_, "enc_norm", cfg_.embed_dim);
    encoder_head1_ = DenseLayer(params_, "enc_head1", cfg_.embed_dim, cfg_.head_hidden(), rng);
    encoder_head2_ = DenseLayer(params_, "enc_head2", cfg_.head_hidden(), cfg_.feature_dim, rng);
    decoder_head1_ = DenseLayer(params_, "dec_head1", cfg_.feature_dim, cfg_.head_hidden(), rng);
    decoder_head2_ = DenseLayer(params_, "dec_head2", cfg_.head_hidden(), cfg_.embed_dim, rng);
    for (std::size_t i = 0; i < cfg_.layers; ++i) {
        decoder_.emplace_back(params_, "dec" + std::to_string(i), cfg_.embed_dim, cfg_.heads,
                              cfg_.ff_hidden(), rng);
    }
    decoder_norm_ = LayerNorm(params_, "dec_norm", cfg_.embed_dim);
    output_proj_ = DenseLayer(params_, "out_proj", cfg_.embed_dim, cfg_.vocab_size, rng);
    positions_ = sinusoidal_positions(cfg_.max_len, cfg_.embed_dim);
}

Var CodecModel::encoder_stack(const Sentence& sentence) const {
    if (sentence.ids.size() != cfg_.max_len) {
        throw std::invalid_argument("codec: sentence length != configured L");
    }
    Var x = add(embedding_lookup(embedding_, sentence.ids), constant(positions_));
    for (const auto& layer : encoder_) x = layer.forward(x);
    return encoder_norm_.forward(x);
}

Var CodecModel::encode_var(const Sentence& sentence) const {
    const Var adapted = encoder_head2_.forward(relu(encoder_head1_.forward(encoder_stack(sentence))));
    return power_normalize(adapted);
}

Var CodecModel::decode_logits_var(const Var& received) const {
    if (received->value.rank() != 2 || received->value.rows() != cfg_.max_len ||
        received->value.cols() != cfg_.feature_dim) {
        throw std::invalid_argument("codec: received frame has wrong shape " +
                                    received->value.shape_str());
    }
    const Var restored = decoder_head2_.forward(relu(decoder_head1_.forward(received)));
    Var x = add(restored, constant(positions_));
    for (const auto& layer : decoder_) x = layer.forward(x);
    return output_proj_.forward(decoder_norm_.forward(x));
}

SemanticFrame CodecModel::encode(const Sentence& sentence) const {
    return SemanticFrame{encode_var(sentence)->value};
}

WordDistribution CodecModel::decode_distribution(const SemanticFrame& frame) const {
    const Var logits = decode_logits_var(constant(frame.features));
    return WordDistribution{softmax_rows(logits->value)};
}

std::vector<double> CodecModel::encoder_embedding(const Sentence& sentence) const {
    const Var stack = encoder_stack(sentence);
    const std::size_t rows = std::max<std::size_t>(sentence.true_length, 1);
    const Var pooled = mean_rows(stack, std::min(rows, cfg_.max_len));
    if (sentence.true_length == 0) {
        return std::vector<double>(cfg_.embed_dim, 0.0);  // degenerate all-pad sentence
    }
    return pooled->value.data;
}

SemanticFrame power_normalize(const SemanticFrame& frame) {
    const double p = frame.power();
    if (p == 0.0) throw std::invalid_argument("power_normalize: degenerate all-zero frame");
    SemanticFrame out{frame.features};
    const double s = std::sqrt(p);
    for (double& v : out.features.data) v /= s;
    return out;
}

Sentence greedy_decode(const WordDistribution& dist, int pad_id) {
    const Tensor& p = dist.probs;
    const std::size_t rows = p.rows(), cols = p.cols();
    Sentence s;
    s.ids.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t best = 0;
        double best_p = p.at(r, 0);
        for (std::size_t c = 1; c < cols; ++c) {
            if (p.at(r, c) > best_p) {
                best_p = p.at(r, c);
                best = c;
            }
        }
        s.ids[r] = static_cast<int>(best);
    }
    std::size_t len = rows;
    while (len > 0 && s.ids[len - 1] == pad_id) --len;
    s.true_length = len;
    return s;
}

std::vector<double> train_codec(CodecModel& model, const std::vector<Sentence>& corpus,
                                const CodecTrainOptions& opts) {
    if (corpus.empty()) throw std::invalid_argument("train_codec: empty corpus");
    opts.channel.validate();
    const double noise_var = noise_variance_from_snr(opts.channel.snr_db);
    const std::size_t n_symbols = model.config().frame_symbols();

    Rng rng(mix_seed(opts.seed, 0x7121Au));
    AdamOptimizer adam(model.parameters(), AdamConfig{opts.learning_rate, 0.9, 0.999, 1e-8});

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> history;
    history.reserve(opts.epochs);

    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            const std::size_t end = std::min(order.size(), start + opts.batch_size);
            model.param_set().zero_grad();
            for (std::size_t i = start; i < end; ++i) {
                const Sentence& s = corpus[order[i]];
                const Var x = model.encode_var(s);
                const ChannelRealization real = sample_channel(opts.channel, n_symbols, rng);
                const Var y = apply_channel_op(x, real, noise_var);
                const Var logits = model.decode_logits_var(y);
                const Var loss = scale(cross_entropy_rows(logits, s.ids),
                                       1.0 / static_cast<double>(end - start));
                const double value = loss->value.data[0] * static_cast<double>(end - start);
                if (!std::isfinite(value)) {
                    throw TrainError("train_codec: non-finite loss at epoch " +
                                         std::to_string(epoch),
                                     epoch);
                }
                epoch_loss += value;
                backward(loss);
            }
            adam.step();
        }
        history.push_back(epoch_loss / static_cast<double>(corpus.size()));
    }
    return history;
}

double token_accuracy(const CodecModel& model, const std::vector<Sentence>& corpus,
                      const ChannelConfig* channel, std::uint64_t seed) {
    if (corpus.empty()) throw std::invalid_argument("token_accuracy: empty corpus");
    Rng rng(mix_seed(seed, 0xACCu));
    const std::size_t n_symbols = model.config().frame_symbols();
    std::size_t correct = 0, total = 0;
    for (const Sentence& s : corpus) {
        SemanticFrame x = model.encode(s);
        Tensor y;
        if (channel != nullptr) {
            const ChannelRealization real = sample_channel(*channel, n_symbols, rng);
            y = apply_channel(x.features, real, noise_variance_from_snr(channel->snr_db));
        } else {
            y = x.features;
        }
        const Sentence decoded = greedy_decode(model.decode_distribution(SemanticFrame{y}), 0);
        for (std::size_t i = 0; i < s.ids.size(); ++i) {
            correct += decoded.ids[i] == s.ids[i] ? 1 : 0;
            ++total;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace semharq
