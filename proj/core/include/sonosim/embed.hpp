#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sonosim/audio.hpp"

namespace sonosim {

struct EmbedderConfig {
    int sample_rate = kDefaultSampleRate;
    int window = 2048;
    int hop = 512;
    int mel_bands = 64;
    int chroma_bins = 12;

    int dim() const { return 2 * (mel_bands + chroma_bins); }
};

// Unit-norm clip feature vector (L2 norm 1 within 1e-6).
struct Embedding {
    std::vector<float> values;

    int dim() const { return static_cast<int>(values.size()); }
};

// Deterministic spectral embedder: log-compressed mel spectrogram and chroma,
// pooled as per-band mean and standard deviation over frames, concatenated
// and L2-normalized. Precomputes the filterbank once; embed() is const and
// safe to call from multiple threads.
class SpectralEmbedder {
public:
    explicit SpectralEmbedder(EmbedderConfig cfg = {});

    Embedding embed(const AudioBuffer& buf) const;
    const EmbedderConfig& config() const { return cfg_; }

private:
    EmbedderConfig cfg_;
    std::vector<double> window_;
    std::vector<std::vector<std::pair<int, double>>> mel_filters_;  // per band: (bin, weight)
    std::vector<int> chroma_class_;                                 // per bin; -1 outside range
};

// One-shot convenience wrapper around SpectralEmbedder.
Embedding embed_clip(const AudioBuffer& buf, const EmbedderConfig& cfg = {});

// dot(a, b) / (|a| |b|). Throws ValidationError on dimension mismatch.
double cosine_similarity(const Embedding& a, const Embedding& b);

// Embedding store file: magic "MREM", u32 version, u32 dim, u64 count,
// count*dim little-endian f32, a JSON-lines trailer of ClipRecords in vector
// order, and a trailing u64 with the byte offset of the trailer.
void export_embeddings(const std::vector<std::pair<ClipRecord, Embedding>>& items,
                       const std::string& path);
std::vector<std::pair<ClipRecord, Embedding>> import_embeddings(const std::string& path,
                                                                int expected_dim = 0);

}  // namespace sonosim
