#pragma once

// Internal JSON helpers shared by the serialization code. Not installed.

#include <fstream>
#include <string>

#include <json.hpp>

#include "sonosim/audio.hpp"
#include "sonosim/errors.hpp"

namespace sonosim::detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json clip_to_json(const ClipRecord& rec) {
    return ordered_json{{"song_id", rec.song_id},
                        {"clip_index", rec.clip_index},
                        {"start_sec", rec.start_sec},
                        {"duration_sec", rec.duration_sec},
                        {"padded", rec.padded}};
}

inline ClipRecord clip_from_json(const ordered_json& j) {
    ClipRecord rec;
    rec.song_id = j.at("song_id").get<std::string>();
    rec.clip_index = j.at("clip_index").get<std::uint32_t>();
    rec.start_sec = j.value("start_sec", rec.clip_index * kClipSeconds);
    rec.duration_sec = j.value("duration_sec", kClipSeconds);
    rec.padded = j.value("padded", false);
    return rec;
}

inline ordered_json parse_json_line(const std::string& line, const std::string& context) {
    try {
        return ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed JSON in " + context + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw IoError("failed writing: " + path);
    }
}

}  // namespace sonosim::detail
