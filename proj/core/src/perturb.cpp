#include "sonosim/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "sonosim/errors.hpp"
#include "sonosim/fft.hpp"
#include "sonosim/resample.hpp"
#include "sonosim/rng.hpp"

namespace sonosim {
namespace {

double princarg(double phase) {
    return phase - 2.0 * M_PI * std::round(phase / (2.0 * M_PI));
}

std::vector<double> periodic_hann(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
    }
    return w;
}

// Classic STFT phase vocoder. alpha is the duration scale: output length is
// round(n * alpha) and all frequencies are preserved.
std::vector<float> vocoder_stretch(std::span<const float> in, double alpha) {
    const int n_fft = kVocoderWindow;
    const int hop = kVocoderHop;
    const int bins = n_fft / 2 + 1;
    const auto in_len = static_cast<long long>(in.size());
    const auto out_len = static_cast<std::size_t>(std::llround(in_len * alpha));
    if (out_len == 0) {
        return {};
    }

    // zero-padded copy so analysis frames near the tail stay in range
    std::vector<double> padded(in_len + n_fft, 0.0);
    for (long long i = 0; i < in_len; ++i) {
        padded[static_cast<std::size_t>(i)] = in[static_cast<std::size_t>(i)];
    }

    const std::vector<double> window = periodic_hann(n_fft);
    const auto frame_count = static_cast<long long>(out_len / hop) + 2;

    std::vector<double> ola(out_len + 2 * hop + n_fft, 0.0);
    std::vector<double> norm(out_len + 2 * hop + n_fft, 0.0);

    std::vector<double> prev_phase(bins, 0.0);
    std::vector<double> synth_phase(bins, 0.0);
    std::vector<std::complex<double>> spectrum;
    std::vector<std::complex<double>> frame(n_fft);
    std::vector<double> windowed(n_fft);

    long long prev_analysis = 0;
    for (long long j = 0; j < frame_count; ++j) {
        long long analysis = std::llround(static_cast<double>(j) * hop / alpha);
        analysis = std::min(analysis, in_len);  // clamp; padding covers the frame

        for (int i = 0; i < n_fft; ++i) {
            windowed[i] = padded[static_cast<std::size_t>(analysis + i)] * window[i];
        }
        spectrum = fft_real(windowed, n_fft);

        if (j == 0) {
            for (int k = 0; k < bins; ++k) {
                prev_phase[k] = std::arg(spectrum[k]);
                synth_phase[k] = prev_phase[k];
            }
        } else {
            const double delta = static_cast<double>(std::max<long long>(1, analysis - prev_analysis));
            for (int k = 0; k < bins; ++k) {
                const double bin_freq = 2.0 * M_PI * k / n_fft;
                const double phase = std::arg(spectrum[k]);
                const double dev = princarg(phase - prev_phase[k] - bin_freq * delta);
                const double inst_freq = bin_freq + dev / delta;
                synth_phase[k] = princarg(synth_phase[k] + inst_freq * hop);
                prev_phase[k] = phase;
            }
        }

        for (int k = 0; k < bins; ++k) {
            const double mag = std::abs(spectrum[k]);
            frame[k] = std::polar(mag, synth_phase[k]);
        }
        // Hermitian symmetry for a real synthesis frame
        for (int k = bins; k < n_fft; ++k) {
            frame[k] = std::conj(frame[n_fft - k]);
        }
        fft_inplace(frame, true);

        const auto out_pos = static_cast<std::size_t>(j) * hop;
        for (int i = 0; i < n_fft; ++i) {
            ola[out_pos + i] += frame[i].real() * window[i];
            norm[out_pos + i] += window[i] * window[i];
        }
        prev_analysis = analysis;
    }

    std::vector<float> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        const double w = norm[i];
        out[i] = static_cast<float>(w > 1e-9 ? ola[i] / w : 0.0);
    }
    return out;
}

}  // namespace

void validate_spec(const PerturbationSpec& spec) {
    switch (spec.kind) {
        case PerturbKind::PitchShift:
            if (spec.amount < -12.0 || spec.amount > 12.0) {
                throw ValidationError("pitch shift must be in [-12, 12] semitones");
            }
            break;
        case PerturbKind::TimeStretch:
            if (spec.amount < -20.0 || spec.amount > 20.0) {
                throw ValidationError("time stretch must be in [-20, 20] percent");
            }
            break;
        case PerturbKind::NoiseOverlay:
            if (spec.amount < -30.0 || spec.amount > 30.0) {
                throw ValidationError("noise level must be in [-30, 30] dB");
            }
            break;
        case PerturbKind::MashUp:
            // The operation itself accepts the full [0, 100] range; the
            // paper's sweep grid uses [5, 95].
            if (spec.amount < 0.0 || spec.amount > 100.0) {
                throw ValidationError("mash-up proportion must be in [0, 100] percent");
            }
            break;
    }
    if ((spec.kind == PerturbKind::MashUp) != spec.partner.has_value()) {
        throw ValidationError("partner clip is required for mash-up and forbidden otherwise");
    }
}

AudioBuffer pitch_shift(const AudioBuffer& buf, double semitones) {
    if (buf.empty()) {
        throw ValidationError("cannot pitch-shift an empty buffer");
    }
    if (semitones < -12.0 || semitones > 12.0) {
        throw ValidationError("pitch shift must be in [-12, 12] semitones");
    }
    if (semitones == 0.0) {
        return buf;
    }
    const double ratio = std::exp2(semitones / 12.0);
    // Stretch duration by the ratio (pitch unchanged), then read back at the
    // ratio to restore the duration while scaling all frequencies.
    const std::vector<float> stretched = vocoder_stretch(buf.samples, ratio);
    const auto out_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(stretched.size()) / ratio));
    AudioBuffer out;
    out.sample_rate = buf.sample_rate;
    out.samples = resample_by_ratio(stretched, ratio, out_len);
    for (float& s : out.samples) {
        s = std::clamp(s, -1.0f, 1.0f);
    }
    return out;
}

AudioBuffer time_stretch(const AudioBuffer& buf, double speed_percent) {
    if (buf.empty()) {
        throw ValidationError("cannot time-stretch an empty buffer");
    }
    if (speed_percent < -20.0 || speed_percent > 20.0) {
        throw ValidationError("time stretch must be in [-20, 20] percent");
    }
    if (speed_percent == 0.0) {
        return buf;
    }
    const double factor = 1.0 + speed_percent / 100.0;
    AudioBuffer out;
    out.sample_rate = buf.sample_rate;
    out.samples = vocoder_stretch(buf.samples, 1.0 / factor);
    for (float& s : out.samples) {
        s = std::clamp(s, -1.0f, 1.0f);
    }
    return out;
}

AudioBuffer add_white_noise(const AudioBuffer& buf, double level_db, std::uint64_t seed) {
    if (level_db < -30.0 || level_db > 30.0) {
        throw ValidationError("noise level must be in [-30, 30] dB");
    }
    const double signal_rms = rms(buf);  // throws on empty
    if (signal_rms <= 0.0) {
        throw ValidationError("noise level is undefined for silent input");
    }
    const double target_rms = signal_rms * std::pow(10.0, level_db / 20.0);

    GaussianGen gen(seed);
    std::vector<double> noise(buf.samples.size());
    double acc = 0.0;
    for (double& v : noise) {
        v = gen.next();
        acc += v * v;
    }
    const double noise_rms = std::sqrt(acc / static_cast<double>(noise.size()));
    const double scale = noise_rms > 0.0 ? target_rms / noise_rms : 0.0;

    AudioBuffer out;
    out.sample_rate = buf.sample_rate;
    out.samples.resize(buf.samples.size());
    for (std::size_t i = 0; i < buf.samples.size(); ++i) {
        const double v = buf.samples[i] + noise[i] * scale;
        out.samples[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
    }
    return out;
}

AudioBuffer mashup(const AudioBuffer& a, const AudioBuffer& b, double target_percent) {
    if (a.sample_rate != b.sample_rate) {
        throw ValidationError("mash-up inputs must share a sample rate");
    }
    if (a.samples.size() != b.samples.size()) {
        throw ValidationError("mash-up inputs must have equal length");
    }
    if (target_percent < 0.0 || target_percent > 100.0) {
        throw ValidationError("mash-up proportion must be in [0, 100] percent");
    }
    if (target_percent == 100.0) {
        return a;
    }
    if (target_percent == 0.0) {
        return b;
    }

    const auto n = static_cast<long long>(a.samples.size());
    const long long splice = std::llround(n * target_percent / 100.0);
    const long long fade = std::llround(0.010 * a.sample_rate);
    const long long fade_start = std::clamp(splice - fade / 2, 0LL, n);
    const long long fade_end = std::clamp(fade_start + fade, fade_start, n);

    AudioBuffer out;
    out.sample_rate = a.sample_rate;
    out.samples.resize(a.samples.size());
    for (long long i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (i < fade_start) {
            out.samples[idx] = a.samples[idx];
        } else if (i >= fade_end) {
            out.samples[idx] = b.samples[idx];
        } else {
            const double t = (static_cast<double>(i) - fade_start + 0.5) / (fade_end - fade_start);
            out.samples[idx] = static_cast<float>((1.0 - t) * a.samples[idx] + t * b.samples[idx]);
        }
    }
    return out;
}

}  // namespace sonosim
