#pragma once

#include <cstdint>
#include <optional>

#include "sonosim/audio.hpp"

namespace sonosim {

enum class PerturbKind {
    PitchShift,   // semitones in [-12, 12]
    TimeStretch,  // speed percent in [-20, 20]; positive = faster
    NoiseOverlay, // dB relative to signal RMS in [-30, 30]
    MashUp,       // target proportion percent; paper grid spans [5, 95]
};

struct PerturbationSpec {
    PerturbKind kind = PerturbKind::PitchShift;
    double amount = 0.0;
    std::optional<ClipRecord> partner;  // MashUp only
    std::uint64_t seed = 0;             // NoiseOverlay only
};

// Throws ValidationError when amount is outside the kind's range or the
// partner field does not match the kind.
void validate_spec(const PerturbationSpec& spec);

// Phase vocoder parameters shared by pitch_shift and time_stretch.
inline constexpr int kVocoderWindow = 2048;
inline constexpr int kVocoderHop = 512;

// Shift dominant frequencies by 2^(semitones/12) while keeping the duration
// within one hop. semitones = 0 returns the input bit-identically.
AudioBuffer pitch_shift(const AudioBuffer& buf, double semitones);

// Change playback speed by factor 1 + percent/100 with pitch held constant.
// Output duration is input / factor within one hop. percent = 0 returns the
// input bit-identically.
AudioBuffer time_stretch(const AudioBuffer& buf, double speed_percent);

// Add seeded Gaussian white noise with RMS = rms(buf) * 10^(level_db/20),
// clamping the sum to [-1, 1]. Throws on silent input.
AudioBuffer add_white_noise(const AudioBuffer& buf, double level_db, std::uint64_t seed);

// Splice: the first target_percent of samples come from a, the rest from b,
// joined with a 10 ms linear crossfade centered on the splice point.
// 100 returns a bit-identically, 0 returns b.
AudioBuffer mashup(const AudioBuffer& a, const AudioBuffer& b, double target_percent);

}  // namespace sonosim
