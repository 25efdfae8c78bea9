#pragma once

#include <span>
#include <vector>

#include "sonosim/audio.hpp"

namespace sonosim {

// Windowed-sinc sample-rate conversion. Same-rate input is returned
// unchanged. Output length is round(n * target_rate / source_rate).
AudioBuffer resample(const AudioBuffer& in, int target_rate);

// Evaluate the input at positions n * ratio for n in [0, out_len).
// ratio > 1 reads the signal faster (shorter output, frequencies scaled up
// when the result is reinterpreted at the original rate).
std::vector<float> resample_by_ratio(std::span<const float> in, double ratio, std::size_t out_len);

}  // namespace sonosim
