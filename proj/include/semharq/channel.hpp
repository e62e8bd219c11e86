#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "semharq/autodiff.hpp"
#include "semharq/tensor.hpp"

namespace semharq {

struct ChannelConfig {
    std::size_t n_paths = 2;
    std::vector<double> power_profile = {0.8, 0.2};  // sums to 1 so E{|h|^2} = 1
    double snr_db = 10.0;
    double rho = 0.99;  // AR(1) tap correlation across symbol times
    std::uint64_t seed = 0;
    bool fading = true;  // false: deterministic unit tap on path 0 (AWGN-only)

    void validate() const;
};

/// Per-transmission channel draw: AR(1) complex Gaussian taps per path and
/// unit-variance complex noise samples. apply_channel scales the noise to
/// the requested variance, so one realization serves any SNR.
struct ChannelRealization {
    std::size_t n_paths = 0;
    std::size_t n_symbols = 0;
    std::vector<std::complex<double>> taps;   // taps[r * n_symbols + t]
    std::vector<std::complex<double>> noise;  // unit variance CN(0,1)

    std::complex<double> tap(std::size_t r, std::size_t t) const { return taps[r * n_symbols + t]; }
};

/// N = 10^(-snr_db/10); transmitted frames are power-normalized to P = 1.
double noise_variance_from_snr(double snr_db);

ChannelRealization sample_channel(const ChannelConfig& config, std::size_t n_symbols, Rng& rng);
ChannelRealization sample_channel(const ChannelConfig& config, std::size_t n_symbols);

/// Identity realization (single unit tap, zero noise scale is up to N).
ChannelRealization identity_realization(std::size_t n_symbols);

/// y(t) = sum_r h_r(t) x(t-r) + sqrt(N) w(t), with consecutive real pairs
/// of the row-major frame interpreted as I/Q of one complex symbol.
Tensor apply_channel(const Tensor& frame, const ChannelRealization& realization,
                     double noise_variance);

/// Differentiable version: taps and noise are constants in the backward
/// pass, the gradient flows through the linear map only.
Var apply_channel_op(const Var& frame, const ChannelRealization& realization,
                     double noise_variance);

}  // namespace semharq
