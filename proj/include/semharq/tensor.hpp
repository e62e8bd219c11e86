#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace semharq {

/// Dense row-major tensor of 64-bit reals. The shape is dynamic; most of
/// the code uses rank 1 (vectors) and rank 2 (matrices).
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);
    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    void fill(double v);

    std::string shape_str() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

// Plain (non-differentiable) tensor math used by the autodiff wrappers and
// by inference-only call sites.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
double dot(const std::vector<double>& a, const std::vector<double>& b);
double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Deterministic PRNG (xoshiro256++ seeded via splitmix64) with explicit
/// distribution code so that streams are reproducible independent of the
/// standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();                          // [0,1)
    double uniform(double lo, double hi);
    std::uint64_t uniform_index(std::uint64_t n);  // [0,n), n >= 1
    double normal();                           // standard normal, Box-Muller
    std::complex<double> complex_normal(double variance);  // CN(0, variance)

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Combines a base seed with a stream index into a well-dispersed sub-seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace semharq
