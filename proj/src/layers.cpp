#include "semharq/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace semharq {

const Var& ParamSet::find(const std::string& name) const {
    for (const auto& p : params) {
        if (p->name == name) return p;
    }
    throw std::invalid_argument("ParamSet: no parameter named " + name);
}

Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-limit, limit);
    return t;
}

Tensor sinusoidal_positions(std::size_t length, std::size_t dim) {
    Tensor pe({length, dim});
    for (std::size_t pos = 0; pos < length; ++pos) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(dim);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
            pe.data[pos * dim + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

DenseLayer::DenseLayer(ParamSet& ps, const std::string& prefix, std::size_t in, std::size_t out,
                       Rng& rng) {
    weight = ps.add(glorot_uniform({in, out}, in, out, rng), prefix + ".weight");
    bias = ps.add(Tensor::zeros({out}), prefix + ".bias");
}

LayerNorm::LayerNorm(ParamSet& ps, const std::string& prefix, std::size_t dim) {
    gamma = ps.add(Tensor({dim}, 1.0), prefix + ".gamma");
    beta = ps.add(Tensor::zeros({dim}), prefix + ".beta");
}

MultiHeadAttention::MultiHeadAttention(ParamSet& ps, const std::string& prefix, std::size_t dim_,
                                       std::size_t heads_, Rng& rng)
    : heads(heads_), dim(dim_) {
    if (heads == 0 || dim % heads != 0) {
        throw std::invalid_argument("MultiHeadAttention: dim must be divisible by heads");
    }
    wq = DenseLayer(ps, prefix + ".wq", dim, dim, rng);
    wk = DenseLayer(ps, prefix + ".wk", dim, dim, rng);
    wv = DenseLayer(ps, prefix + ".wv", dim, dim, rng);
    wo = DenseLayer(ps, prefix + ".wo", dim, dim, rng);
}

Var MultiHeadAttention::forward(const Var& queries, const Var& keys, const Var& values) const {
    if (queries->value.cols() != dim || keys->value.cols() != dim ||
        values->value.cols() != dim) {
        throw std::invalid_argument("MultiHeadAttention: feature width mismatch");
    }
    if (keys->value.rows() != values->value.rows()) {
        throw std::invalid_argument("MultiHeadAttention: key/value row mismatch");
    }
    const Var q = wq.forward(queries);
    const Var k = wk.forward(keys);
    const Var v = wv.forward(values);
    const std::size_t dh = dim / heads;
    const double scaling = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Var> ctx;
    ctx.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const Var qh = slice_cols(q, h * dh, (h + 1) * dh);
        const Var kh = slice_cols(k, h * dh, (h + 1) * dh);
        const Var vh = slice_cols(v, h * dh, (h + 1) * dh);
        const Var scores = scale(matmul(qh, transpose(kh)), scaling);
        ctx.push_back(matmul(softmax_rows(scores), vh));
    }
    return wo.forward(heads == 1 ? ctx[0] : concat_cols(ctx));
}

TransformerLayer::TransformerLayer(ParamSet& ps, const std::string& prefix, std::size_t dim,
                                   std::size_t heads, std::size_t ff_hidden, Rng& rng) {
    ln_attn = LayerNorm(ps, prefix + ".ln_attn", dim);
    ln_ff = LayerNorm(ps, prefix + ".ln_ff", dim);
    attn = MultiHeadAttention(ps, prefix + ".attn", dim, heads, rng);
    ff1 = DenseLayer(ps, prefix + ".ff1", dim, ff_hidden, rng);
    ff2 = DenseLayer(ps, prefix + ".ff2", ff_hidden, dim, rng);
}

Var TransformerLayer::forward(const Var& x) const {
    const Var a = ln_attn.forward(x);
    const Var after_attn = add(x, attn.forward(a, a, a));
    const Var f = ln_ff.forward(after_attn);
    return add(after_attn, ff2.forward(relu(ff1.forward(f))));
}

void adam_step(Node& param, AdamState& state, const AdamConfig& cfg) {
    if (param.grad.data.empty()) throw std::logic_error("adam_step: gradient not populated");
    if (!param.grad.same_shape(param.value)) {
        throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
    if (state.first_moment.data.empty()) {
        state.first_moment = Tensor::zeros(param.value.shape);
        state.second_moment = Tensor::zeros(param.value.shape);
    }
    state.step_count += 1;
    bool all_zero = true;
    for (double g : param.grad.data) {
        if (g != 0.0) {
            all_zero = false;
            break;
        }
    }
    const std::size_t n = param.value.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = param.grad.data[i];
        state.first_moment.data[i] = cfg.beta1 * state.first_moment.data[i] + (1.0 - cfg.beta1) * g;
        state.second_moment.data[i] =
            cfg.beta2 * state.second_moment.data[i] + (1.0 - cfg.beta2) * g * g;
    }
    if (all_zero) return;  // moments decay, value untouched
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < n; ++i) {
        const double mhat = state.first_moment.data[i] / bc1;
        const double vhat = state.second_moment.data[i] / bc2;
        param.value.data[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

AdamOptimizer::AdamOptimizer(const std::vector<Var>& params, AdamConfig cfg)
    : params_(params), states_(params.size()), cfg_(cfg) {}

void AdamOptimizer::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) adam_step(*params_[i], states_[i], cfg_);
}

}  // namespace semharq
