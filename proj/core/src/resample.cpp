#include "sonosim/resample.hpp"

#include <cmath>

#include "sonosim/errors.hpp"

namespace sonosim {
namespace {

constexpr int kHalfTaps = 32;       // sinc zero crossings per side
constexpr double kKaiserBeta = 10.0;
constexpr double kRolloff = 0.945;

double bessel_i0(double x) {
    // power series; converges quickly for the argument range used here
    double sum = 1.0;
    double term = 1.0;
    const double half_x = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half_x / k) * (half_x / k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

double kaiser(double t, double width) {
    const double r = t / width;
    if (std::abs(r) >= 1.0) return 0.0;
    return bessel_i0(kKaiserBeta * std::sqrt(1.0 - r * r)) / bessel_i0(kKaiserBeta);
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

}  // namespace

std::vector<float> resample_by_ratio(std::span<const float> in, double ratio,
                                     std::size_t out_len) {
    if (ratio <= 0.0) {
        throw InternalError("resample ratio must be positive");
    }
    std::vector<float> out(out_len);
    if (in.empty()) {
        return out;
    }
    // When decimating, the kernel is dilated by the ratio and the cutoff
    // lowered accordingly to suppress aliasing.
    const double dilation = std::max(1.0, ratio);
    const double cutoff = kRolloff * 0.5 / dilation;
    const double width = kHalfTaps * dilation;
    const auto n = static_cast<long long>(in.size());

    for (std::size_t i = 0; i < out_len; ++i) {
        const double pos = static_cast<double>(i) * ratio;
        const auto center = static_cast<long long>(std::floor(pos));
        const auto lo = center - static_cast<long long>(width) ;
        const auto hi = center + static_cast<long long>(width) + 1;
        double acc = 0.0;
        double wsum = 0.0;
        for (long long j = lo; j <= hi; ++j) {
            const double t = pos - static_cast<double>(j);
            const double w = kaiser(t, width) * sinc(2.0 * cutoff * t);
            wsum += w;
            if (j >= 0 && j < n) {
                acc += w * in[static_cast<std::size_t>(j)];
            }
        }
        out[i] = wsum > 0.0 ? static_cast<float>(acc / wsum) : 0.0f;
    }
    return out;
}

AudioBuffer resample(const AudioBuffer& in, int target_rate) {
    if (target_rate <= 0) {
        throw ValidationError("target sample rate must be positive");
    }
    if (in.sample_rate <= 0) {
        throw ValidationError("source sample rate must be positive");
    }
    if (in.sample_rate == target_rate) {
        return in;
    }
    const double ratio = static_cast<double>(in.sample_rate) / target_rate;
    const auto out_len = static_cast<std::size_t>(std::llround(
        static_cast<double>(in.samples.size()) * target_rate / in.sample_rate));
    AudioBuffer out;
    out.sample_rate = target_rate;
    out.samples = resample_by_ratio(in.samples, ratio, out_len);
    for (float& s : out.samples) {
        s = std::clamp(s, -1.0f, 1.0f);
    }
    return out;
}

}  // namespace sonosim
