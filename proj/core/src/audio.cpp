#include "sonosim/audio.hpp"

#include <cmath>

#include "sonosim/errors.hpp"
#include "sonosim/resample.hpp"
#include "sonosim/wav.hpp"

namespace sonosim {

AudioBuffer ingest_audio(const std::string& path, int target_rate) {
    if (target_rate <= 0) {
        throw ValidationError("target sample rate must be positive");
    }
    AudioBuffer mono = read_wav_mono(path);
    return resample(mono, target_rate);
}

std::vector<std::pair<ClipRecord, AudioBuffer>> segment_into_clips(const AudioBuffer& buf,
                                                                   const std::string& song_id) {
    if (buf.sample_rate <= 0) {
        throw ValidationError("buffer has no sample rate");
    }
    const auto clip_len = static_cast<std::size_t>(std::llround(kClipSeconds * buf.sample_rate));
    const auto min_tail = static_cast<std::size_t>(std::llround(kMinTailSeconds * buf.sample_rate));
    if (buf.samples.size() < min_tail) {
        throw ValidationError("buffer shorter than 1.5 s cannot be segmented");
    }

    std::vector<std::pair<ClipRecord, AudioBuffer>> clips;
    const std::size_t n = buf.samples.size();
    const std::size_t full = n / clip_len;
    const std::size_t remainder = n - full * clip_len;

    for (std::size_t i = 0; i < full; ++i) {
        ClipRecord rec;
        rec.song_id = song_id;
        rec.clip_index = static_cast<std::uint32_t>(i);
        rec.start_sec = static_cast<double>(i) * kClipSeconds;
        rec.duration_sec = kClipSeconds;
        rec.padded = false;
        AudioBuffer clip;
        clip.sample_rate = buf.sample_rate;
        clip.samples.assign(buf.samples.begin() + static_cast<std::ptrdiff_t>(i * clip_len),
                            buf.samples.begin() + static_cast<std::ptrdiff_t>((i + 1) * clip_len));
        clips.emplace_back(std::move(rec), std::move(clip));
    }

    if (remainder >= min_tail) {
        ClipRecord rec;
        rec.song_id = song_id;
        rec.clip_index = static_cast<std::uint32_t>(full);
        rec.start_sec = static_cast<double>(full) * kClipSeconds;
        rec.duration_sec = kClipSeconds;
        rec.padded = true;
        AudioBuffer clip;
        clip.sample_rate = buf.sample_rate;
        clip.samples.assign(buf.samples.begin() + static_cast<std::ptrdiff_t>(full * clip_len),
                            buf.samples.end());
        clip.samples.resize(clip_len, 0.0f);
        clips.emplace_back(std::move(rec), std::move(clip));
    }

    return clips;
}

double rms(const AudioBuffer& buf) {
    if (buf.empty()) {
        throw ValidationError("rms of empty buffer is undefined");
    }
    double acc = 0.0;
    for (float s : buf.samples) {
        acc += static_cast<double>(s) * s;
    }
    return std::sqrt(acc / static_cast<double>(buf.samples.size()));
}

}  // namespace sonosim
