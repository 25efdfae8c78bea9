#pragma once

// Shared fixtures: deterministic synthetic audio, independent oracles, and
// temp-file helpers. The oracles here are intentionally naive and separate
// from the library's own DSP/search paths.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sonosim/audio.hpp"
#include "sonosim/embed.hpp"
#include "sonosim/index.hpp"
#include "sonosim/rng.hpp"

namespace sonosim::testutil {

inline AudioBuffer sine(double freq, double dur_sec, int sr = kDefaultSampleRate,
                        double amp = 0.5, double phase = 0.0) {
    AudioBuffer b;
    b.sample_rate = sr;
    const auto n = static_cast<std::size_t>(std::llround(dur_sec * sr));
    b.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        b.samples[i] = static_cast<float>(
            amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / sr + phase));
    }
    return b;
}

// Song-level voice: base frequency, harmonic decay, AM character, and an
// interval voice. Clip-level variation: detune, phases, partial jitter, and
// a quiet noise floor. Everything derives from (song_seed, clip_idx).
inline AudioBuffer make_clip(std::uint64_t song_seed, int clip_idx,
                             int sr = kDefaultSampleRate, double dur_sec = kClipSeconds) {
    std::mt19937_64 song_rng(splitmix64(song_seed));
    auto u = [](std::mt19937_64& g) {
        return static_cast<double>(g() >> 11) * 0x1.0p-53;
    };

    const double f0 = 80.0 * std::exp2(u(song_rng) * 2.6);
    const double decay = 0.6 + u(song_rng);
    const double odd_boost = 0.6 + 0.8 * u(song_rng);
    const double am_rate = 0.5 + 4.5 * u(song_rng);
    const double am_depth = 0.2 + 0.3 * u(song_rng);
    const double intervals[] = {1.25, 4.0 / 3.0, 1.5};
    const double interval = intervals[song_rng() % 3];
    const double voice2_level = 0.15 + 0.25 * u(song_rng);

    std::mt19937_64 clip_rng(mix_seed(song_seed, 0xC11F, static_cast<std::uint64_t>(clip_idx)));
    const double detune = 1.0 + (u(clip_rng) - 0.5) * 0.006;
    const double am_phase = 2.0 * M_PI * u(clip_rng);
    constexpr int kPartials = 6;
    double weights[kPartials];
    double phases[kPartials];
    for (int h = 0; h < kPartials; ++h) {
        const double base = std::pow(h + 1.0, -decay) * ((h % 2 == 0) ? odd_boost : 1.0);
        weights[h] = base * (0.8 + 0.4 * u(clip_rng));
        phases[h] = 2.0 * M_PI * u(clip_rng);
    }
    const double voice2_phase = 2.0 * M_PI * u(clip_rng);
    GaussianGen noise(mix_seed(song_seed, 0x9015E, static_cast<std::uint64_t>(clip_idx)));

    AudioBuffer b;
    b.sample_rate = sr;
    const auto n = static_cast<std::size_t>(std::llround(dur_sec * sr));
    b.samples.resize(n);
    double peak = 0.0;
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sr;
        double v = 0.0;
        for (int h = 0; h < kPartials; ++h) {
            v += weights[h] * std::sin(2.0 * M_PI * f0 * detune * (h + 1) * t + phases[h]);
        }
        v += voice2_level * std::sin(2.0 * M_PI * f0 * detune * interval * t + voice2_phase);
        v *= 1.0 - am_depth * 0.5 * (1.0 + std::cos(2.0 * M_PI * am_rate * t + am_phase));
        v += 0.01 * noise.next();
        raw[i] = v;
        peak = std::max(peak, std::abs(v));
    }
    const double scale = peak > 0.0 ? 0.42 / peak : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        b.samples[i] = static_cast<float>(raw[i] * scale);
    }
    return b;
}

struct TestCorpus {
    std::vector<std::pair<ClipRecord, AudioBuffer>> clips;
    SongMetaTable meta;

    const AudioBuffer& clip_audio(const ClipRecord& rec) const {
        for (const auto& [r, audio] : clips) {
            if (r == rec) return audio;
        }
        throw std::runtime_error("clip not in test corpus: " + rec.song_id);
    }

    std::function<AudioBuffer(const ClipRecord&)> source() const {
        return [this](const ClipRecord& rec) { return clip_audio(rec); };
    }
};

inline TestCorpus make_corpus(int n_songs, int clips_per_song, std::uint64_t seed = 0) {
    TestCorpus corpus;
    for (int s = 0; s < n_songs; ++s) {
        char id[32];
        std::snprintf(id, sizeof(id), "song-%03d", s);
        const std::uint64_t song_seed = mix_seed(seed, 0x50176, static_cast<std::uint64_t>(s));
        for (int c = 0; c < clips_per_song; ++c) {
            ClipRecord rec;
            rec.song_id = id;
            rec.clip_index = static_cast<std::uint32_t>(c);
            rec.start_sec = c * kClipSeconds;
            rec.duration_sec = kClipSeconds;
            corpus.clips.emplace_back(rec, make_clip(song_seed, c));
        }
        SongMeta m;
        m.song_id = id;
        m.title = std::string("Title ") + id;
        m.artist = std::string("Artist ") + std::to_string(s % 7);
        m.total_duration_sec = clips_per_song * kClipSeconds;
        corpus.meta[m.song_id] = std::move(m);
    }
    return corpus;
}

inline std::vector<std::pair<ClipRecord, Embedding>> embed_corpus(const TestCorpus& corpus,
                                                                  const EmbedderConfig& cfg = {}) {
    const SpectralEmbedder embedder(cfg);
    std::vector<std::pair<ClipRecord, Embedding>> items;
    items.reserve(corpus.clips.size());
    for (const auto& [rec, audio] : corpus.clips) {
        items.emplace_back(rec, embedder.embed(audio));
    }
    return items;
}

// Naive windowed-DFT peak picker on a 1 Hz grid; independent of the
// library's FFT.
inline double oracle_peak_freq(const AudioBuffer& b, double lo_hz, double hi_hz) {
    const std::size_t n = b.samples.size();
    double best = lo_hz;
    double best_mag = -1.0;
    for (double f = lo_hz; f <= hi_hz; f += 1.0) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
            const double ph = 2.0 * M_PI * f * static_cast<double>(i) / b.sample_rate;
            re += b.samples[i] * w * std::cos(ph);
            im -= b.samples[i] * w * std::sin(ph);
        }
        const double mag = re * re + im * im;
        if (mag > best_mag) {
            best_mag = mag;
            best = f;
        }
    }
    return best;
}

// Brute-force top-k by cosine similarity; independent of VectorIndex.
inline std::vector<std::pair<double, std::size_t>> oracle_topk(
    const std::vector<std::pair<ClipRecord, Embedding>>& items, const Embedding& q, int k) {
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        scored.emplace_back(cosine_similarity(items[i].second, q), i);
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return clip_identity_less(items[a.second].first, items[b.second].first);
    });
    if (scored.size() > static_cast<std::size_t>(k)) {
        scored.resize(static_cast<std::size_t>(k));
    }
    return scored;
}

inline Embedding random_unit_embedding(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> nd;
    Embedding e;
    e.values.resize(static_cast<std::size_t>(dim));
    double norm_sq = 0.0;
    for (auto& v : e.values) {
        v = static_cast<float>(nd(rng));
        norm_sq += static_cast<double>(v) * v;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& v : e.values) {
        v = static_cast<float>(v * inv);
    }
    return e;
}

// Unit vector with a prescribed cosine similarity to the base vector.
inline Embedding embedding_at_similarity(const Embedding& base, double target_sim,
                                         std::mt19937_64& rng) {
    const int dim = base.dim();
    Embedding ortho = random_unit_embedding(rng, dim);
    double proj = 0.0;
    for (int i = 0; i < dim; ++i) {
        proj += static_cast<double>(ortho.values[i]) * base.values[i];
    }
    double norm_sq = 0.0;
    for (int i = 0; i < dim; ++i) {
        ortho.values[i] = static_cast<float>(ortho.values[i] - proj * base.values[i]);
        norm_sq += static_cast<double>(ortho.values[i]) * ortho.values[i];
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    const double s = std::sqrt(std::max(0.0, 1.0 - target_sim * target_sim));
    Embedding out;
    out.values.resize(static_cast<std::size_t>(dim));
    double out_norm = 0.0;
    for (int i = 0; i < dim; ++i) {
        out.values[i] = static_cast<float>(target_sim * base.values[i] +
                                           s * ortho.values[i] * inv);
        out_norm += static_cast<double>(out.values[i]) * out.values[i];
    }
    const double fix = 1.0 / std::sqrt(out_norm);
    for (auto& v : out.values) {
        v = static_cast<float>(v * fix);
    }
    return out;
}

class TempDir {
public:
    TempDir() {
        const auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 10000; ++i) {
            auto candidate = base / ("sonosim-test-" + std::to_string(::getpid()) + "-" +
                                     std::to_string(counter_++));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create temp dir");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace sonosim::testutil
