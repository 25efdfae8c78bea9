#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sonosim {

inline constexpr int kDefaultSampleRate = 22050;
inline constexpr double kClipSeconds = 3.0;
// Trailing remainders at least this long are zero-padded into a final clip;
// shorter remainders are dropped. Also the minimum ingestible query length.
inline constexpr double kMinTailSeconds = 1.5;

// Mono audio. Samples are finite and clamped to [-1, 1] at ingestion.
struct AudioBuffer {
    std::vector<float> samples;
    int sample_rate = 0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration_sec() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// Stable identity of one fixed-length clip within a corpus.
struct ClipRecord {
    std::string song_id;
    std::uint32_t clip_index = 0;
    double start_sec = 0.0;
    double duration_sec = 0.0;
    bool padded = false;

    friend bool operator==(const ClipRecord& a, const ClipRecord& b) {
        return a.song_id == b.song_id && a.clip_index == b.clip_index;
    }
};

// Orders hits with equal scores: (song_id, clip_index) ascending.
inline bool clip_identity_less(const ClipRecord& a, const ClipRecord& b) {
    if (a.song_id != b.song_id) return a.song_id < b.song_id;
    return a.clip_index < b.clip_index;
}

struct SongMeta {
    std::string song_id;
    std::string title;
    std::string artist;
    std::string source_path;
    double total_duration_sec = 0.0;
};

// Decode a PCM WAV file (8/16/24-bit int or 32-bit float, mono or stereo),
// mix down to mono by channel mean, and resample to target_rate.
// Same-rate input passes through bit-identically.
AudioBuffer ingest_audio(const std::string& path, int target_rate = kDefaultSampleRate);

// Split into consecutive non-overlapping 3 s clips. A trailing remainder of
// at least 1.5 s is zero-padded to 3 s and marked padded; shorter remainders
// are dropped. Throws ValidationError for buffers under 1.5 s.
std::vector<std::pair<ClipRecord, AudioBuffer>> segment_into_clips(const AudioBuffer& buf,
                                                                   const std::string& song_id);

// Root-mean-square of the samples. Throws ValidationError on empty input.
double rms(const AudioBuffer& buf);

}  // namespace sonosim
