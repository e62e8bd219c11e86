#include "semharq/tensor.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace semharq {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)), data(shape_numel(shape), fill) {
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("Tensor: zero dimension");
    }
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != data.size()) {
        throw std::invalid_argument("Tensor: shape/data size mismatch");
    }
}

std::size_t Tensor::rows() const {
    if (shape.size() != 2) throw std::invalid_argument("Tensor::rows: not a matrix");
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (shape.size() != 2) throw std::invalid_argument("Tensor::cols: not a matrix");
    return shape[1];
}

double& Tensor::at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
double Tensor::at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) {
    for (double& x : data) x = v;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: incompatible shapes " + a.shape_str() +
                                    " * " + b.shape_str());
    }
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = &a.data[i * k];
        double* orow = &out.data[i * m];
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = &b.data[p * m];
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("transpose: not a matrix");
    Tensor out({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Tensor softmax_rows(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("softmax_rows: not a matrix");
    Tensor out(a.shape);
    const std::size_t n = a.rows(), m = a.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = &a.data[i * m];
        double mx = row[0];
        for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        double* orow = &out.data[i * m];
        for (std::size_t j = 0; j < m; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (std::size_t j = 0; j < m; ++j) orow[j] /= sum;
    }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::complex<double> Rng::complex_normal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t x = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    return splitmix64(x);
}

}  // namespace semharq
