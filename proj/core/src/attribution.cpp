#include "sonosim/attribution.hpp"

#include <algorithm>
#include <map>

#include "json_io.hpp"
#include "sonosim/errors.hpp"

namespace sonosim {

std::vector<SongMatch> aggregate_clip_hits_to_songs(const std::vector<Hit>& hits,
                                                    const SongMetaTable& meta) {
    std::map<std::string, const Hit*> best;
    for (const auto& hit : hits) {
        auto [it, inserted] = best.try_emplace(hit.clip.song_id, &hit);
        if (!inserted) {
            const Hit* cur = it->second;
            if (hit.score > cur->score ||
                (hit.score == cur->score && clip_identity_less(hit.clip, cur->clip))) {
                it->second = &hit;
            }
        }
    }

    std::vector<SongMatch> matches;
    matches.reserve(best.size());
    for (const auto& [song_id, hit] : best) {
        auto meta_it = meta.find(song_id);
        if (meta_it == meta.end()) {
            throw ValidationError("hit references unknown song_id: " + song_id);
        }
        SongMatch m;
        m.song_id = song_id;
        m.best_clip = hit->clip;
        m.score = hit->score;
        m.meta = meta_it->second;
        matches.push_back(std::move(m));
    }
    std::sort(matches.begin(), matches.end(), [](const SongMatch& a, const SongMatch& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.song_id < b.song_id;
    });
    return matches;
}

AttributionReport attribute(const AudioBuffer& query_audio, const VectorIndex& idx,
                            const AttributeOptions& opts, const AudioBuffer* prompt) {
    if (idx.size() == 0) {
        throw ValidationError("cannot attribute against an empty index");
    }
    if (opts.k_clips < 1 || opts.k_songs < 1) {
        throw ValidationError("k_clips and k_songs must be at least 1");
    }

    const SpectralEmbedder embedder(opts.embedder);
    const auto clips = segment_into_clips(query_audio, opts.query_id.empty() ? "query"
                                                                             : opts.query_id);

    AttributionReport report;
    report.query_id = opts.query_id;
    report.threshold = opts.threshold;

    std::vector<Embedding> query_embeddings;
    query_embeddings.reserve(clips.size());
    std::vector<Hit> pooled;
    for (const auto& [rec, audio] : clips) {
        Embedding e = embedder.embed(audio);
        auto hits = idx.search_topk(e, opts.k_clips, opts.mode);
        pooled.insert(pooled.end(), hits.begin(), hits.end());
        report.clip_hits.push_back(std::move(hits));
        query_embeddings.push_back(std::move(e));
    }

    auto matches = aggregate_clip_hits_to_songs(pooled, idx.song_meta());
    if (matches.size() > static_cast<std::size_t>(opts.k_songs)) {
        matches.resize(static_cast<std::size_t>(opts.k_songs));
    }
    report.song_matches = std::move(matches);
    report.flagged =
        !report.song_matches.empty() && report.song_matches.front().score >= opts.threshold;

    if (prompt != nullptr) {
        const auto prompt_clips = segment_into_clips(*prompt, "prompt");
        double best = -1.0;
        for (const auto& [rec, audio] : prompt_clips) {
            const Embedding pe = embedder.embed(audio);
            for (const Embedding& qe : query_embeddings) {
                best = std::max(best, cosine_similarity(qe, pe));
            }
        }
        report.prompt_similarity = best;
    }
    return report;
}

std::vector<std::pair<std::string, double>> influence_census(
    const std::vector<AttributionReport>& reports, int top_n, double threshold_fraction) {
    if (top_n < 1) {
        throw ValidationError("census top_n must be at least 1");
    }
    if (reports.empty()) {
        throw ValidationError("census needs at least one report");
    }

    std::map<std::string, int> appearances;
    for (const auto& report : reports) {
        const std::size_t limit =
            std::min<std::size_t>(static_cast<std::size_t>(top_n), report.song_matches.size());
        for (std::size_t i = 0; i < limit; ++i) {
            ++appearances[report.song_matches[i].song_id];
        }
    }

    std::vector<std::pair<std::string, double>> out;
    const double inv_n = 1.0 / static_cast<double>(reports.size());
    for (const auto& [song_id, count] : appearances) {
        const double fraction = count * inv_n;
        if (fraction > threshold_fraction) {
            out.emplace_back(song_id, fraction);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

std::string report_to_json_string(const AttributionReport& report) {
    detail::ordered_json j;
    j["query_id"] = report.query_id;
    auto& matches = j["song_matches"] = detail::ordered_json::array();
    for (const auto& m : report.song_matches) {
        matches.push_back(detail::ordered_json{
            {"song_id", m.song_id},
            {"title", m.meta.title},
            {"artist", m.meta.artist},
            {"best_clip", detail::ordered_json{{"clip_index", m.best_clip.clip_index},
                                               {"start_sec", m.best_clip.start_sec}}},
            {"score", m.score}});
    }
    j["threshold"] = report.threshold;
    j["flagged"] = report.flagged;
    if (report.prompt_similarity.has_value()) {
        j["prompt_similarity"] = *report.prompt_similarity;
    } else {
        j["prompt_similarity"] = nullptr;
    }
    return j.dump(2) + "\n";
}

void write_report(const AttributionReport& report, const std::string& path) {
    detail::write_text_file(path, report_to_json_string(report));
}

}  // namespace sonosim
