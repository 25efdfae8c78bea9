#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sonosim/audio.hpp"
#include "sonosim/embed.hpp"
#include "sonosim/index.hpp"

namespace sonosim {

// One song's best showing among a query's clip hits.
struct SongMatch {
    std::string song_id;
    ClipRecord best_clip;
    double score = 0.0;  // max over the song's hit clips
    SongMeta meta;
};

struct AttributionReport {
    std::string query_id;
    std::vector<std::vector<Hit>> clip_hits;  // per query clip, as searched
    std::vector<SongMatch> song_matches;      // sorted by score descending
    double threshold = 0.875;
    bool flagged = false;  // any match at or above threshold
    std::optional<double> prompt_similarity;
};

struct AttributeOptions {
    std::string query_id;
    int k_clips = 50;  // hits requested per query clip
    int k_songs = 10;  // song matches kept in the report
    double threshold = 0.875;
    SearchMode mode = SearchMode::Exact;
    EmbedderConfig embedder{};
};

// Group hits by song, keep the max clip score per song, sort descending with
// lexicographic song_id tiebreak. Throws on hits referencing songs missing
// from the metadata table.
std::vector<SongMatch> aggregate_clip_hits_to_songs(const std::vector<Hit>& hits,
                                                    const SongMetaTable& meta);

// Segment the query, embed and search each clip, aggregate to songs. When a
// prompt is supplied, prompt_similarity is the max cosine similarity over all
// (query clip, prompt clip) embedding pairs.
AttributionReport attribute(const AudioBuffer& query_audio, const VectorIndex& idx,
                            const AttributeOptions& opts = {},
                            const AudioBuffer* prompt = nullptr);

// Fraction of reports whose top-n song matches include each song; returns
// songs with fraction strictly above threshold_fraction, sorted descending
// (ties by song_id).
std::vector<std::pair<std::string, double>> influence_census(
    const std::vector<AttributionReport>& reports, int top_n, double threshold_fraction);

std::string report_to_json_string(const AttributionReport& report);
void write_report(const AttributionReport& report, const std::string& path);

}  // namespace sonosim
