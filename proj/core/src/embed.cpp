#include "sonosim/embed.hpp"

#include <cmath>

#include "sonosim/errors.hpp"
#include "sonosim/fft.hpp"

namespace sonosim {
namespace {

// Slaney mel scale: linear below 1 kHz, logarithmic above.
constexpr double kMelBreakHz = 1000.0;
constexpr double kMelBreak = 15.0;
constexpr double kMelPerHz = 3.0 / 200.0;
const double kMelLogStep = std::log(6.4) / 27.0;

double hz_to_mel(double f) {
    if (f < kMelBreakHz) return f * kMelPerHz;
    return kMelBreak + std::log(f / kMelBreakHz) / kMelLogStep;
}

double mel_to_hz(double m) {
    if (m < kMelBreak) return m / kMelPerHz;
    return kMelBreakHz * std::exp((m - kMelBreak) * kMelLogStep);
}

constexpr double kChromaMinHz = 27.5;  // A0; bins below carry no pitch class
constexpr double kMinClipSeconds = 0.5;

}  // namespace

SpectralEmbedder::SpectralEmbedder(EmbedderConfig cfg) : cfg_(cfg) {
    if (cfg_.sample_rate <= 0 || cfg_.window <= 0 || cfg_.hop <= 0 || cfg_.mel_bands <= 0 ||
        cfg_.chroma_bins <= 0) {
        throw ValidationError("embedder config fields must be positive");
    }
    if ((cfg_.window & (cfg_.window - 1)) != 0) {
        throw ValidationError("embedder window must be a power of two");
    }

    window_.resize(cfg_.window);
    for (int i = 0; i < cfg_.window; ++i) {
        window_[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / cfg_.window));
    }

    const int bins = cfg_.window / 2 + 1;
    const double bin_hz = static_cast<double>(cfg_.sample_rate) / cfg_.window;
    const double f_max = cfg_.sample_rate / 2.0;

    // Triangular mel filters on mel-equidistant points over [0, Nyquist].
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(f_max);
    std::vector<double> edges(cfg_.mel_bands + 2);
    for (int i = 0; i < cfg_.mel_bands + 2; ++i) {
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg_.mel_bands + 1));
    }
    mel_filters_.assign(cfg_.mel_bands, {});
    for (int b = 0; b < cfg_.mel_bands; ++b) {
        const double left = edges[b], center = edges[b + 1], right = edges[b + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = k * bin_hz;
            double w = 0.0;
            if (f > left && f < center && center > left) {
                w = (f - left) / (center - left);
            } else if (f >= center && f < right && right > center) {
                w = (right - f) / (right - center);
            }
            if (w > 0.0) {
                mel_filters_[b].emplace_back(k, w);
            }
        }
    }

    chroma_class_.assign(bins, -1);
    for (int k = 1; k < bins; ++k) {
        const double f = k * bin_hz;
        if (f < kChromaMinHz || f > f_max) continue;
        const double midi = 69.0 + 12.0 * std::log2(f / 440.0);
        const int pc = static_cast<int>(std::llround(midi)) % 12;
        chroma_class_[k] = (pc % cfg_.chroma_bins + cfg_.chroma_bins) % cfg_.chroma_bins;
    }
}

Embedding SpectralEmbedder::embed(const AudioBuffer& buf) const {
    if (buf.sample_rate != cfg_.sample_rate) {
        throw ValidationError("buffer sample rate " + std::to_string(buf.sample_rate) +
                              " does not match embedder rate " +
                              std::to_string(cfg_.sample_rate));
    }
    const auto min_len =
        static_cast<std::size_t>(std::llround(kMinClipSeconds * cfg_.sample_rate));
    if (buf.samples.size() < min_len || buf.samples.size() < static_cast<std::size_t>(cfg_.window)) {
        throw ValidationError("buffer too short to embed (need at least 0.5 s)");
    }

    const int n_fft = cfg_.window;
    const int bins = n_fft / 2 + 1;
    const int n_mel = cfg_.mel_bands;
    const int n_chroma = cfg_.chroma_bins;
    const std::size_t frames = (buf.samples.size() - n_fft) / cfg_.hop + 1;

    std::vector<double> mel_sum(n_mel, 0.0), mel_sumsq(n_mel, 0.0);
    std::vector<double> chr_sum(n_chroma, 0.0), chr_sumsq(n_chroma, 0.0);
    std::vector<double> windowed(n_fft);
    std::vector<double> power(bins);
    std::vector<double> chroma(n_chroma);

    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t base = f * cfg_.hop;
        for (int i = 0; i < n_fft; ++i) {
            windowed[i] = buf.samples[base + i] * window_[i];
        }
        const auto spectrum = fft_real(windowed, n_fft);
        for (int k = 0; k < bins; ++k) {
            power[k] = std::norm(spectrum[k]);
        }

        for (int b = 0; b < n_mel; ++b) {
            double e = 0.0;
            for (const auto& [k, w] : mel_filters_[b]) {
                e += w * power[k];
            }
            const double v = std::log1p(e);
            mel_sum[b] += v;
            mel_sumsq[b] += v * v;
        }

        std::fill(chroma.begin(), chroma.end(), 0.0);
        for (int k = 0; k < bins; ++k) {
            if (chroma_class_[k] >= 0) {
                chroma[chroma_class_[k]] += power[k];
            }
        }
        for (int c = 0; c < n_chroma; ++c) {
            const double v = std::log1p(chroma[c]);
            chr_sum[c] += v;
            chr_sumsq[c] += v * v;
        }
    }

    const double inv_f = 1.0 / static_cast<double>(frames);
    std::vector<double> feat;
    feat.reserve(cfg_.dim());
    auto push_pooled = [&](const std::vector<double>& sum, const std::vector<double>& sumsq,
                           bool stddev) {
        for (std::size_t i = 0; i < sum.size(); ++i) {
            const double mean = sum[i] * inv_f;
            if (stddev) {
                feat.push_back(std::sqrt(std::max(0.0, sumsq[i] * inv_f - mean * mean)));
            } else {
                feat.push_back(mean);
            }
        }
    };
    push_pooled(mel_sum, mel_sumsq, false);
    push_pooled(mel_sum, mel_sumsq, true);
    push_pooled(chr_sum, chr_sumsq, false);
    push_pooled(chr_sum, chr_sumsq, true);

    double norm_sq = 0.0;
    for (double v : feat) {
        norm_sq += v * v;
    }
    if (norm_sq < 1e-24) {
        throw ValidationError("clip is silent; embedding undefined");
    }
    const double inv_norm = 1.0 / std::sqrt(norm_sq);

    Embedding e;
    e.values.resize(feat.size());
    for (std::size_t i = 0; i < feat.size(); ++i) {
        e.values[i] = static_cast<float>(feat[i] * inv_norm);
    }
    return e;
}

Embedding embed_clip(const AudioBuffer& buf, const EmbedderConfig& cfg) {
    return SpectralEmbedder(cfg).embed(buf);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw ValidationError("embedding dimension mismatch: " + std::to_string(a.dim()) +
                              " vs " + std::to_string(b.dim()));
    }
    if (a.values.empty()) {
        throw ValidationError("cannot compare empty embeddings");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        dot += static_cast<double>(a.values[i]) * b.values[i];
        na += static_cast<double>(a.values[i]) * a.values[i];
        nb += static_cast<double>(b.values[i]) * b.values[i];
    }
    if (na <= 0.0 || nb <= 0.0) {
        throw ValidationError("cosine similarity undefined for zero vectors");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace sonosim
