#include "sonosim/fft.hpp"

#include <cmath>

#include "sonosim/errors.hpp"

namespace sonosim {

FftPlan::FftPlan(std::size_t n) : n_(n) {
    if (n == 0 || (n & (n - 1)) != 0) {
        throw InternalError("fft size must be a power of two");
    }
    bitrev_.resize(n);
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        bitrev_[i] = j;
    }
    // twiddles for each stage, packed as n/2 roots of unity
    twiddle_.resize(n / 2);
    twiddle_inv_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        twiddle_[k] = {std::cos(ang), std::sin(ang)};
        twiddle_inv_[k] = std::conj(twiddle_[k]);
    }
}

void FftPlan::transform(std::vector<std::complex<double>>& a, bool inverse) const {
    if (a.size() != n_) {
        throw InternalError("fft input size does not match plan");
    }
    for (std::size_t i = 1; i < n_; ++i) {
        const std::size_t j = bitrev_[i];
        if (i < j) {
            std::swap(a[i], a[j]);
        }
    }
    const auto& tw = inverse ? twiddle_inv_ : twiddle_;
    for (std::size_t len = 2; len <= n_; len <<= 1) {
        const std::size_t stride = n_ / len;
        for (std::size_t i = 0; i < n_; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> w = tw[k * stride];
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n_);
        for (auto& x : a) {
            x *= scale;
        }
    }
}

void FftPlan::forward(std::vector<std::complex<double>>& a) const { transform(a, false); }
void FftPlan::inverse(std::vector<std::complex<double>>& a) const { transform(a, true); }

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const FftPlan plan(a.size());
    if (inverse) {
        plan.inverse(a);
    } else {
        plan.forward(a);
    }
}

std::vector<std::complex<double>> fft_real(std::span<const double> x, std::size_t n) {
    std::vector<std::complex<double>> a(n, {0.0, 0.0});
    const std::size_t m = std::min(n, x.size());
    for (std::size_t i = 0; i < m; ++i) {
        a[i] = {x[i], 0.0};
    }
    fft_inplace(a, false);
    return a;
}

}  // namespace sonosim
