#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace sonosim {

// Radix-2 FFT with precomputed bit-reversal and twiddle tables. Reuse one
// plan when transforming many frames of the same size.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);  // n must be a power of two

    std::size_t size() const { return n_; }
    void forward(std::vector<std::complex<double>>& a) const;
    void inverse(std::vector<std::complex<double>>& a) const;

private:
    void transform(std::vector<std::complex<double>>& a, bool inverse) const;

    std::size_t n_;
    std::vector<std::size_t> bitrev_;
    std::vector<std::complex<double>> twiddle_;      // forward, per butterfly stride
    std::vector<std::complex<double>> twiddle_inv_;
};

// One-shot helpers.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// Forward transform of a real signal zero-padded/truncated to n points.
std::vector<std::complex<double>> fft_real(std::span<const double> x, std::size_t n);

}  // namespace sonosim
