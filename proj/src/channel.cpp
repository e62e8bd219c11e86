#include "semharq/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace semharq {

void ChannelConfig::validate() const {
    if (n_paths < 1) throw std::invalid_argument("channel: n_paths must be >= 1");
    if (power_profile.size() != n_paths) {
        throw std::invalid_argument("channel: power profile length != n_paths");
    }
    double sum = 0.0;
    for (double p : power_profile) {
        if (p < 0.0) throw std::invalid_argument("channel: negative path power");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("channel: path powers must sum to 1 (E{|h|^2} = 1)");
    }
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("channel: rho must be in [0,1]");
}

double noise_variance_from_snr(double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    return std::pow(10.0, -snr_db / 10.0);
}

ChannelRealization sample_channel(const ChannelConfig& config, std::size_t n_symbols, Rng& rng) {
    config.validate();
    if (n_symbols < 1) throw std::invalid_argument("sample_channel: n_symbols must be >= 1");
    ChannelRealization real;
    real.n_paths = config.n_paths;
    real.n_symbols = n_symbols;
    real.taps.resize(config.n_paths * n_symbols);
    real.noise.resize(n_symbols);
    for (std::size_t r = 0; r < config.n_paths; ++r) {
        const double var = config.power_profile[r];
        if (!config.fading) {
            const std::complex<double> fixed = r == 0 ? 1.0 : 0.0;
            for (std::size_t t = 0; t < n_symbols; ++t) real.taps[r * n_symbols + t] = fixed;
            continue;
        }
        std::complex<double> h = rng.complex_normal(var);
        real.taps[r * n_symbols] = h;
        const double drift = std::sqrt(1.0 - config.rho * config.rho);
        for (std::size_t t = 1; t < n_symbols; ++t) {
            h = config.rho * h + drift * rng.complex_normal(var);
            real.taps[r * n_symbols + t] = h;
        }
    }
    for (std::size_t t = 0; t < n_symbols; ++t) real.noise[t] = rng.complex_normal(1.0);
    return real;
}

ChannelRealization sample_channel(const ChannelConfig& config, std::size_t n_symbols) {
    Rng rng(config.seed);
    return sample_channel(config, n_symbols, rng);
}

ChannelRealization identity_realization(std::size_t n_symbols) {
    ChannelRealization real;
    real.n_paths = 1;
    real.n_symbols = n_symbols;
    real.taps.assign(n_symbols, 1.0);
    real.noise.assign(n_symbols, 0.0);
    return real;
}

namespace {

void check_frame(const Tensor& frame, const ChannelRealization& realization) {
    if (frame.size() % 2 != 0) {
        throw std::invalid_argument("apply_channel: feature count must be even (I/Q pairs)");
    }
    if (realization.n_symbols < frame.size() / 2) {
        throw std::invalid_argument("apply_channel: realization covers too few symbol times");
    }
}

}  // namespace

Tensor apply_channel(const Tensor& frame, const ChannelRealization& realization,
                     double noise_variance) {
    check_frame(frame, realization);
    const std::size_t n_sym = frame.size() / 2;
    const double noise_scale = std::sqrt(noise_variance);
    Tensor out(frame.shape);
    for (std::size_t t = 0; t < n_sym; ++t) {
        std::complex<double> y = noise_scale != 0.0
                                     ? noise_scale * realization.noise[t]
                                     : std::complex<double>(0.0, 0.0);
        for (std::size_t r = 0; r < realization.n_paths && r <= t; ++r) {
            const std::size_t src = t - r;
            const std::complex<double> x(frame.data[2 * src], frame.data[2 * src + 1]);
            y += realization.tap(r, t) * x;
        }
        out.data[2 * t] = y.real();
        out.data[2 * t + 1] = y.imag();
    }
    return out;
}

Var apply_channel_op(const Var& frame, const ChannelRealization& realization,
                     double noise_variance) {
    Tensor out = apply_channel(frame->value, realization, noise_variance);
    auto real_p = std::make_shared<ChannelRealization>(realization);
    return make_op(std::move(out), {frame}, [frame, real_p](Node& self) {
        if (!frame->requires_grad) return;
        Tensor& g = frame->ensure_grad();
        const std::size_t n_sym = self.value.size() / 2;
        // Linear map adjoint: grad_x(t) += conj(h_r(t+r)) * grad_y(t+r).
        for (std::size_t t = 0; t < n_sym; ++t) {
            std::complex<double> gx(0.0, 0.0);
            for (std::size_t r = 0; r < real_p->n_paths && t + r < n_sym; ++r) {
                const std::complex<double> gy(self.grad.data[2 * (t + r)],
                                              self.grad.data[2 * (t + r) + 1]);
                gx += std::conj(real_p->tap(r, t + r)) * gy;
            }
            g.data[2 * t] += gx.real();
            g.data[2 * t + 1] += gx.imag();
        }
    });
}

}  // namespace semharq
