#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semharq/autodiff.hpp"
#include "semharq/tensor.hpp"

namespace semharq {

/// Ordered registry of a model's trainable parameters. Registration order
/// is the checkpoint order, so construction must be deterministic.
struct ParamSet {
    std::vector<Var> params;

    Var add(Tensor value, std::string name) {
        params.push_back(make_parameter(std::move(value), std::move(name)));
        return params.back();
    }
    const Var& find(const std::string& name) const;
    void zero_grad() const { semharq::zero_grad(params); }
};

/// Uniform init in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng);

/// Fixed sinusoidal positional encodings, shape [length x dim].
Tensor sinusoidal_positions(std::size_t length, std::size_t dim);

struct DenseLayer {
    Var weight;  // [in x out]
    Var bias;    // [out]

    DenseLayer() = default;
    DenseLayer(ParamSet& ps, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng);
    Var forward(const Var& x) const { return add_rowvec(matmul(x, weight), bias); }
};

struct LayerNorm {
    Var gamma;
    Var beta;
    double eps = 1e-5;

    LayerNorm() = default;
    LayerNorm(ParamSet& ps, const std::string& prefix, std::size_t dim);
    Var forward(const Var& x) const { return layer_norm_rows(x, gamma, beta, eps); }
};

/// Standard scaled dot-product multi-head attention with learned Q/K/V/O
/// projections. Queries may have a different row count than keys/values.
struct MultiHeadAttention {
    std::size_t heads = 1;
    std::size_t dim = 0;
    DenseLayer wq, wk, wv, wo;

    MultiHeadAttention() = default;
    MultiHeadAttention(ParamSet& ps, const std::string& prefix, std::size_t dim,
                       std::size_t heads, Rng& rng);
    Var forward(const Var& queries, const Var& keys, const Var& values) const;
};

/// Pre-norm transformer layer: x + Attn(LN(x)), then x + FFN(LN(x)).
struct TransformerLayer {
    LayerNorm ln_attn, ln_ff;
    MultiHeadAttention attn;
    DenseLayer ff1, ff2;

    TransformerLayer() = default;
    TransformerLayer(ParamSet& ps, const std::string& prefix, std::size_t dim, std::size_t heads,
                     std::size_t ff_hidden, Rng& rng);
    Var forward(const Var& x) const;
};

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    Tensor first_moment;
    Tensor second_moment;
    std::uint64_t step_count = 0;
};

/// One Adam update for a single parameter. Moments always decay and the
/// step count advances, but an all-zero gradient leaves the value as-is.
void adam_step(Node& param, AdamState& state, const AdamConfig& cfg);

class AdamOptimizer {
public:
    AdamOptimizer(const std::vector<Var>& params, AdamConfig cfg);
    void step();
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Var> params_;
    std::vector<AdamState> states_;
    AdamConfig cfg_;
};

}  // namespace semharq
