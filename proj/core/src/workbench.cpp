#include "sonosim/workbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "json_io.hpp"
#include "sonosim/errors.hpp"
#include "sonosim/rng.hpp"

namespace sonosim {
namespace {

void validate_level(SweepKind kind, double level) {
    PerturbationSpec spec;
    spec.amount = level;
    switch (kind) {
        case SweepKind::PitchShift:
            spec.kind = PerturbKind::PitchShift;
            break;
        case SweepKind::TimeStretch:
            spec.kind = PerturbKind::TimeStretch;
            break;
        case SweepKind::NoiseOverlay:
            spec.kind = PerturbKind::NoiseOverlay;
            break;
        default:
            spec.kind = PerturbKind::MashUp;
            spec.partner = ClipRecord{};
            break;
    }
    validate_spec(spec);
}

double stat_median(std::vector<double> v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (n % 2 == 0) {
        m = (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid))) / 2.0;
    }
    return m;
}

StatBlock make_stats(const std::vector<double>& values) {
    StatBlock s;
    s.n = static_cast<int>(values.size());
    if (values.empty()) {
        return s;
    }
    double mean = 0.0;
    double mx = values.front();
    for (double v : values) {
        mean += v;
        mx = std::max(mx, v);
    }
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(values.size());
    s.mean = mean;
    s.median = stat_median(values);
    s.sd = std::sqrt(var);
    s.max = mx;
    return s;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

detail::ordered_json stats_to_json(const StatBlock& s) {
    return detail::ordered_json{
        {"mean", s.mean}, {"median", s.median}, {"sd", s.sd}, {"max", s.max}, {"n", s.n}};
}

}  // namespace

RecallCurve robustness_sweep(const VectorIndex& idx, const ClipSource& clip_source,
                             const SweepConfig& cfg,
                             const std::vector<AudioBuffer>* external_partners,
                             const std::vector<PromptVampPair>* prompt_vamp_pairs) {
    if (cfg.levels.empty()) {
        throw ValidationError("sweep needs at least one level");
    }
    if (cfg.n_targets < 1) {
        throw ValidationError("sweep needs at least one target");
    }
    for (double level : cfg.levels) {
        validate_level(cfg.kind, level);
    }

    if (cfg.kind == SweepKind::MashupOutTrain &&
        (external_partners == nullptr || external_partners->empty())) {
        throw ValidationError("out-of-training mash-up sweep needs external partner clips");
    }
    if (cfg.kind == SweepKind::MashupPromptVamp &&
        (prompt_vamp_pairs == nullptr || prompt_vamp_pairs->empty())) {
        throw ValidationError("prompt/vamp mash-up sweep needs prompt-vamp pairs");
    }

    std::mt19937_64 rng(mix_seed(cfg.seed, 0xA11CE));

    // target selection
    struct Target {
        ClipRecord record;
        AudioBuffer audio;
        const AudioBuffer* partner = nullptr;
        AudioBuffer partner_storage;
    };
    std::vector<Target> targets;
    targets.reserve(static_cast<std::size_t>(cfg.n_targets));

    if (cfg.kind == SweepKind::MashupPromptVamp) {
        if (static_cast<std::size_t>(cfg.n_targets) > prompt_vamp_pairs->size()) {
            throw ValidationError("n_targets exceeds the number of prompt-vamp pairs");
        }
        std::vector<std::size_t> ids(prompt_vamp_pairs->size());
        std::iota(ids.begin(), ids.end(), 0);
        for (int i = 0; i < cfg.n_targets; ++i) {
            const std::size_t j = static_cast<std::size_t>(i) + rng() % (ids.size() - i);
            std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
            const auto& pair = (*prompt_vamp_pairs)[ids[static_cast<std::size_t>(i)]];
            Target t;
            t.record = pair.prompt;
            t.audio = clip_source(pair.prompt);
            t.partner_storage = pair.vamp;
            t.partner = &t.partner_storage;
            targets.push_back(std::move(t));
        }
    } else {
        if (static_cast<std::size_t>(cfg.n_targets) > idx.size()) {
            throw ValidationError("n_targets exceeds the index size");
        }
        std::vector<std::size_t> ids(idx.size());
        std::iota(ids.begin(), ids.end(), 0);
        for (int i = 0; i < cfg.n_targets; ++i) {
            const std::size_t j = static_cast<std::size_t>(i) + rng() % (ids.size() - i);
            std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
        }
        for (int i = 0; i < cfg.n_targets; ++i) {
            Target t;
            t.record = idx.record(ids[static_cast<std::size_t>(i)]);
            t.audio = clip_source(t.record);
            targets.push_back(std::move(t));
        }
        if (cfg.kind == SweepKind::MashupInTrain) {
            for (auto& t : targets) {
                bool found = false;
                for (int attempt = 0; attempt < 200 && !found; ++attempt) {
                    const std::size_t pid = rng() % idx.size();
                    const ClipRecord& rec = idx.record(pid);
                    if (rec.song_id == t.record.song_id) continue;
                    t.partner_storage = clip_source(rec);
                    t.partner = &t.partner_storage;
                    found = true;
                }
                if (!found) {
                    throw ValidationError(
                        "could not draw a mash-up partner from a different song");
                }
            }
        } else if (cfg.kind == SweepKind::MashupOutTrain) {
            for (auto& t : targets) {
                t.partner_storage = (*external_partners)[rng() % external_partners->size()];
                t.partner = &t.partner_storage;
            }
        }
    }

    const SpectralEmbedder embedder(cfg.embedder);
    RecallCurve curve;
    curve.points.reserve(cfg.levels.size());

    for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
        const double level = cfg.levels[li];
        int hits1 = 0, hits5 = 0, hits10 = 0;
        for (std::size_t ti = 0; ti < targets.size(); ++ti) {
            const Target& t = targets[ti];
            AudioBuffer perturbed;
            switch (cfg.kind) {
                case SweepKind::PitchShift:
                    perturbed = pitch_shift(t.audio, level);
                    break;
                case SweepKind::TimeStretch:
                    perturbed = time_stretch(t.audio, level);
                    break;
                case SweepKind::NoiseOverlay:
                    perturbed = add_white_noise(t.audio, level, mix_seed(cfg.seed, li, ti));
                    break;
                default:
                    perturbed = mashup(t.audio, *t.partner, level);
                    break;
            }
            const Embedding e = embedder.embed(perturbed);
            const auto clip_hits = idx.search_topk(e, cfg.k_clips, cfg.mode);
            const auto matches = aggregate_clip_hits_to_songs(clip_hits, idx.song_meta());
            int rank = -1;
            for (std::size_t r = 0; r < matches.size() && r < 10; ++r) {
                if (matches[r].song_id == t.record.song_id) {
                    rank = static_cast<int>(r);
                    break;
                }
            }
            if (rank == 0) ++hits1;
            if (rank >= 0 && rank < 5) ++hits5;
            if (rank >= 0) ++hits10;
        }
        RecallPoint p;
        p.level = level;
        const double inv = 1.0 / static_cast<double>(targets.size());
        p.recall_at_1 = hits1 * inv;
        p.recall_at_5 = hits5 * inv;
        p.recall_at_10 = hits10 * inv;
        curve.points.push_back(p);
    }
    return curve;
}

ModelEvalSummary model_eval(const std::vector<EvalQuery>& queries, const VectorIndex& idx,
                            const std::vector<double>& thresholds,
                            const AttributeOptions& base_opts) {
    if (queries.empty()) {
        throw ValidationError("model evaluation needs at least one query");
    }
    if (thresholds.empty()) {
        throw ValidationError("model evaluation needs at least one threshold");
    }
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        if (thresholds[i] >= thresholds[i - 1]) {
            throw ValidationError("thresholds must be sorted strictly descending");
        }
    }

    AttributeOptions opts = base_opts;
    opts.k_songs = std::max(opts.k_songs, 10);

    std::vector<double> top1_scores;
    std::vector<double> prompt_scores;
    std::vector<double> top5_best, top10_best;
    top1_scores.reserve(queries.size());
    for (const auto& q : queries) {
        opts.query_id = q.query_id;
        const auto report =
            attribute(q.audio, idx, opts, q.prompt.has_value() ? &*q.prompt : nullptr);
        if (report.song_matches.empty()) {
            throw InternalError("attribution returned no song matches");
        }
        top1_scores.push_back(report.song_matches.front().score);
        double best5 = report.song_matches.front().score;
        double best10 = best5;
        for (std::size_t r = 0; r < report.song_matches.size() && r < 10; ++r) {
            const double s = report.song_matches[r].score;
            if (r < 5) best5 = std::max(best5, s);
            best10 = std::max(best10, s);
        }
        top5_best.push_back(best5);
        top10_best.push_back(best10);
        if (report.prompt_similarity.has_value()) {
            prompt_scores.push_back(*report.prompt_similarity);
        }
    }

    ModelEvalSummary summary;
    summary.n_queries = static_cast<int>(queries.size());
    summary.top1_similarity = make_stats(top1_scores);
    if (!prompt_scores.empty()) {
        summary.prompt_similarity = make_stats(prompt_scores);
    }

    const double inv_n = 100.0 / static_cast<double>(queries.size());
    for (double threshold : thresholds) {
        CensusRow row;
        row.threshold = threshold;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            if (top1_scores[i] >= threshold) ++row.top1.count;
            if (top5_best[i] >= threshold) ++row.top5.count;
            if (top10_best[i] >= threshold) ++row.top10.count;
        }
        row.top1.pct = row.top1.count * inv_n;
        row.top5.pct = row.top5.count * inv_n;
        row.top10.pct = row.top10.count * inv_n;
        summary.census.push_back(row);
    }
    return summary;
}

ReportFormat parse_report_format(const std::string& name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "csv") return ReportFormat::Csv;
    throw ValidationError("unknown report format: " + name + " (expected json or csv)");
}

std::string curve_to_csv(const RecallCurve& curve) {
    std::string out = "level,recall_at_1,recall_at_5,recall_at_10\n";
    for (const auto& p : curve.points) {
        out += format_double(p.level) + "," + format_double(p.recall_at_1) + "," +
               format_double(p.recall_at_5) + "," + format_double(p.recall_at_10) + "\n";
    }
    return out;
}

std::string curve_to_json_string(const RecallCurve& curve) {
    detail::ordered_json points = detail::ordered_json::array();
    for (const auto& p : curve.points) {
        points.push_back(detail::ordered_json{{"level", p.level},
                                              {"recall_at_1", p.recall_at_1},
                                              {"recall_at_5", p.recall_at_5},
                                              {"recall_at_10", p.recall_at_10}});
    }
    return detail::ordered_json{{"points", points}}.dump(2) + "\n";
}

std::string summary_to_json_string(const ModelEvalSummary& summary) {
    detail::ordered_json j;
    j["n_queries"] = summary.n_queries;
    if (summary.prompt_similarity.has_value()) {
        j["prompt_similarity"] = stats_to_json(*summary.prompt_similarity);
    } else {
        j["prompt_similarity"] = nullptr;
    }
    j["top1_similarity"] = stats_to_json(summary.top1_similarity);
    detail::ordered_json census = detail::ordered_json::array();
    for (const auto& row : summary.census) {
        census.push_back(detail::ordered_json{
            {"threshold", row.threshold},
            {"top1", {{"count", row.top1.count}, {"pct", row.top1.pct}}},
            {"top5", {{"count", row.top5.count}, {"pct", row.top5.pct}}},
            {"top10", {{"count", row.top10.count}, {"pct", row.top10.pct}}}});
    }
    j["census"] = census;
    return j.dump(2) + "\n";
}

std::string summary_to_csv(const ModelEvalSummary& summary) {
    std::string out = "key,value\n";
    auto add = [&out](const std::string& key, const std::string& value) {
        out += key + "," + value + "\n";
    };
    add("n_queries", std::to_string(summary.n_queries));
    auto add_stats = [&](const std::string& prefix, const StatBlock& s) {
        add(prefix + ".mean", format_double(s.mean));
        add(prefix + ".median", format_double(s.median));
        add(prefix + ".sd", format_double(s.sd));
        add(prefix + ".max", format_double(s.max));
        add(prefix + ".n", std::to_string(s.n));
    };
    if (summary.prompt_similarity.has_value()) {
        add_stats("prompt_similarity", *summary.prompt_similarity);
    }
    add_stats("top1_similarity", summary.top1_similarity);
    for (const auto& row : summary.census) {
        const std::string key = "census[" + format_double(row.threshold) + "]";
        add(key + ".top1_count", std::to_string(row.top1.count));
        add(key + ".top1_pct", format_double(row.top1.pct));
        add(key + ".top5_count", std::to_string(row.top5.count));
        add(key + ".top5_pct", format_double(row.top5.pct));
        add(key + ".top10_count", std::to_string(row.top10.count));
        add(key + ".top10_pct", format_double(row.top10.pct));
    }
    return out;
}

void emit_report(const RecallCurve& curve, const std::string& path, ReportFormat format) {
    detail::write_text_file(path, format == ReportFormat::Csv ? curve_to_csv(curve)
                                                              : curve_to_json_string(curve));
}

void emit_report(const ModelEvalSummary& summary, const std::string& path, ReportFormat format) {
    detail::write_text_file(path, format == ReportFormat::Csv ? summary_to_csv(summary)
                                                              : summary_to_json_string(summary));
}

}  // namespace sonosim
