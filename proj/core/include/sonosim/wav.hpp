#pragma once

#include <string>

#include "sonosim/audio.hpp"

namespace sonosim {

enum class WavSampleFormat {
    Int16,
    Float32,
};

// Decode a RIFF/WAVE file to mono at the file's native rate. Multi-channel
// audio is averaged across channels. Supports PCM 8/16/24-bit integer and
// 32-bit IEEE float.
AudioBuffer read_wav_mono(const std::string& path);

void write_wav(const std::string& path, const AudioBuffer& buf,
               WavSampleFormat format = WavSampleFormat::Float32);

}  // namespace sonosim
