#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sonosim/audio.hpp"

namespace sonosim {

// Corpus manifest: one JSON object per line with
// {song_id, title, artist, source_path} and an optional total_duration_sec.
std::vector<SongMeta> read_corpus_manifest(const std::string& path);
void write_corpus_manifest(const std::vector<SongMeta>& songs, const std::string& path);

// Clip table: one JSON object per line with
// {song_id, clip_index, start_sec, duration_sec, padded}.
void write_clip_table(const std::vector<ClipRecord>& clips, const std::string& path);
std::vector<ClipRecord> read_clip_table(const std::string& path);

// Evaluation queries: one JSON object per line with
// {query_id, source_path} and an optional prompt_path.
struct QuerySpec {
    std::string query_id;
    std::string source_path;
    std::optional<std::string> prompt_path;
};
std::vector<QuerySpec> read_query_manifest(const std::string& path);

}  // namespace sonosim
