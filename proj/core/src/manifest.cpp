#include "sonosim/manifest.hpp"

#include <fstream>

#include "json_io.hpp"
#include "sonosim/errors.hpp"

namespace sonosim {

std::vector<SongMeta> read_corpus_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open corpus manifest: " + path);
    }
    std::vector<SongMeta> songs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = detail::parse_json_line(line, path);
        try {
            SongMeta m;
            m.song_id = j.at("song_id").get<std::string>();
            m.title = j.value("title", std::string{});
            m.artist = j.value("artist", std::string{});
            m.source_path = j.at("source_path").get<std::string>();
            m.total_duration_sec = j.value("total_duration_sec", 0.0);
            songs.push_back(std::move(m));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("malformed manifest " + path + ": " + e.what());
        }
    }
    if (songs.empty()) {
        throw ValidationError("corpus manifest is empty: " + path);
    }
    return songs;
}

void write_corpus_manifest(const std::vector<SongMeta>& songs, const std::string& path) {
    std::string out;
    for (const auto& m : songs) {
        detail::ordered_json j{{"song_id", m.song_id},
                               {"title", m.title},
                               {"artist", m.artist},
                               {"source_path", m.source_path}};
        if (m.total_duration_sec > 0.0) {
            j["total_duration_sec"] = m.total_duration_sec;
        }
        out += j.dump();
        out += '\n';
    }
    detail::write_text_file(path, out);
}

void write_clip_table(const std::vector<ClipRecord>& clips, const std::string& path) {
    std::string out;
    for (const auto& rec : clips) {
        out += detail::clip_to_json(rec).dump();
        out += '\n';
    }
    detail::write_text_file(path, out);
}

std::vector<ClipRecord> read_clip_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open clip table: " + path);
    }
    std::vector<ClipRecord> clips;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        clips.push_back(detail::clip_from_json(detail::parse_json_line(line, path)));
    }
    return clips;
}

std::vector<QuerySpec> read_query_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open query manifest: " + path);
    }
    std::vector<QuerySpec> queries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = detail::parse_json_line(line, path);
        try {
            QuerySpec q;
            q.source_path = j.at("source_path").get<std::string>();
            q.query_id = j.value("query_id", q.source_path);
            if (j.contains("prompt_path") && !j.at("prompt_path").is_null()) {
                q.prompt_path = j.at("prompt_path").get<std::string>();
            }
            queries.push_back(std::move(q));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("malformed query manifest " + path + ": " + e.what());
        }
    }
    if (queries.empty()) {
        throw ValidationError("query manifest is empty: " + path);
    }
    return queries;
}

}  // namespace sonosim
