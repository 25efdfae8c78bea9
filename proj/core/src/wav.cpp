#include "sonosim/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "sonosim/errors.hpp"

namespace sonosim {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatIeeeFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float clamp_sample(double v) {
    return static_cast<float>(std::clamp(v, -1.0, 1.0));
}

}  // namespace

AudioBuffer read_wav_mono(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open WAV file: " + path);
    }
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
        std::memcmp(data.data() + 8, "WAVE", 4) != 0) {
        throw ValidationError("not a RIFF/WAVE file: " + path);
    }

    std::uint16_t format_tag = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits_per_sample = 0;
    bool have_fmt = false;
    const unsigned char* payload = nullptr;
    std::size_t payload_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= data.size()) {
        const char* chunk_id = reinterpret_cast<const char*>(data.data() + pos);
        const std::uint32_t chunk_len = read_u32(data.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_len > data.size()) {
            throw ValidationError("truncated WAV chunk in " + path);
        }
        if (std::memcmp(chunk_id, "fmt ", 4) == 0) {
            if (chunk_len < 16) {
                throw ValidationError("malformed fmt chunk in " + path);
            }
            format_tag = read_u16(data.data() + body);
            channels = read_u16(data.data() + body + 2);
            sample_rate = read_u32(data.data() + body + 4);
            bits_per_sample = read_u16(data.data() + body + 14);
            if (format_tag == kFormatExtensible && chunk_len >= 40) {
                // first two bytes of the SubFormat GUID carry the real tag
                format_tag = read_u16(data.data() + body + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(chunk_id, "data", 4) == 0) {
            payload = data.data() + body;
            payload_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }

    if (!have_fmt || payload == nullptr) {
        throw ValidationError("WAV file missing fmt/data chunk: " + path);
    }
    if (channels == 0 || sample_rate == 0) {
        throw ValidationError("WAV file has invalid format fields: " + path);
    }
    const bool pcm_int = format_tag == kFormatPcm &&
                         (bits_per_sample == 8 || bits_per_sample == 16 || bits_per_sample == 24);
    const bool pcm_float = format_tag == kFormatIeeeFloat && bits_per_sample == 32;
    if (!pcm_int && !pcm_float) {
        throw ValidationError("unsupported WAV codec (format tag " + std::to_string(format_tag) +
                              ", " + std::to_string(bits_per_sample) + " bit) in " + path);
    }

    const std::size_t bytes_per_sample = bits_per_sample / 8;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t frames = payload_len / frame_bytes;
    if (frames == 0) {
        throw ValidationError("zero-length audio: " + path);
    }

    AudioBuffer out;
    out.sample_rate = static_cast<int>(sample_rate);
    out.samples.resize(frames);
    const double inv_channels = 1.0 / channels;
    for (std::size_t f = 0; f < frames; ++f) {
        const unsigned char* fp = payload + f * frame_bytes;
        double acc = 0.0;
        for (unsigned c = 0; c < channels; ++c) {
            const unsigned char* sp = fp + c * bytes_per_sample;
            double v = 0.0;
            switch (bits_per_sample) {
                case 8:
                    v = (static_cast<int>(sp[0]) - 128) / 128.0;
                    break;
                case 16: {
                    const std::int16_t s = static_cast<std::int16_t>(read_u16(sp));
                    v = s / 32768.0;
                    break;
                }
                case 24: {
                    std::int32_t s = sp[0] | (sp[1] << 8) | (sp[2] << 16);
                    if (s & 0x800000) s |= ~0xFFFFFF;
                    v = s / 8388608.0;
                    break;
                }
                case 32: {
                    std::uint32_t bits = read_u32(sp);
                    float fv;
                    std::memcpy(&fv, &bits, sizeof(fv));
                    v = fv;
                    break;
                }
                default:
                    throw InternalError("unreachable sample width");
            }
            acc += v;
        }
        out.samples[f] = clamp_sample(acc * inv_channels);
    }
    return out;
}

void write_wav(const std::string& path, const AudioBuffer& buf, WavSampleFormat format) {
    if (buf.sample_rate <= 0) {
        throw ValidationError("cannot write WAV with non-positive sample rate");
    }
    const std::uint16_t channels = 1;
    const std::uint16_t bits = format == WavSampleFormat::Float32 ? 32 : 16;
    const std::uint16_t tag = format == WavSampleFormat::Float32 ? kFormatIeeeFloat : kFormatPcm;
    const std::uint32_t byte_rate = buf.sample_rate * channels * bits / 8;
    const std::uint16_t block_align = channels * bits / 8;
    const std::uint32_t data_len = static_cast<std::uint32_t>(buf.samples.size() * bits / 8);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    auto put_u16 = [&out](std::uint16_t v) {
        unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>(v >> 8)};
        out.write(reinterpret_cast<const char*>(b), 2);
    };
    auto put_u32 = [&out](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };

    out.write("RIFF", 4);
    put_u32(36 + data_len);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(tag);
    put_u16(channels);
    put_u32(static_cast<std::uint32_t>(buf.sample_rate));
    put_u32(byte_rate);
    put_u16(block_align);
    put_u16(bits);
    out.write("data", 4);
    put_u32(data_len);

    if (format == WavSampleFormat::Float32) {
        for (float s : buf.samples) {
            std::uint32_t bits32;
            std::memcpy(&bits32, &s, sizeof(bits32));
            put_u32(bits32);
        }
    } else {
        for (float s : buf.samples) {
            const double v = std::clamp(static_cast<double>(s), -1.0, 1.0);
            const auto q = static_cast<std::int16_t>(std::lround(v * 32767.0));
            put_u16(static_cast<std::uint16_t>(q));
        }
    }
    if (!out) {
        throw IoError("failed writing WAV: " + path);
    }
}

}  // namespace sonosim
