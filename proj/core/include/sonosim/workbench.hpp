#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sonosim/attribution.hpp"
#include "sonosim/audio.hpp"
#include "sonosim/index.hpp"
#include "sonosim/perturb.hpp"

namespace sonosim {

enum class SweepKind {
    PitchShift,
    TimeStretch,
    NoiseOverlay,
    MashupInTrain,    // partner is another stored clip from a different song
    MashupOutTrain,   // partner drawn from clips outside the index
    MashupPromptVamp, // target is a stored prompt clip, partner its vamp
};

struct SweepConfig {
    SweepKind kind = SweepKind::PitchShift;
    std::vector<double> levels;
    int n_targets = 200;
    int k_clips = 50;
    SearchMode mode = SearchMode::Exact;
    std::uint64_t seed = 0;
    EmbedderConfig embedder{};
};

struct RecallPoint {
    double level = 0.0;
    double recall_at_1 = 0.0;
    double recall_at_5 = 0.0;
    double recall_at_10 = 0.0;
};

struct RecallCurve {
    std::vector<RecallPoint> points;
};

// Resolves a stored clip's waveform, e.g. by re-reading corpus audio.
using ClipSource = std::function<AudioBuffer(const ClipRecord&)>;

// Waveforms paired with their in-index prompt clip, for the prompt/vamp
// mash-up variant.
struct PromptVampPair {
    ClipRecord prompt;
    AudioBuffer vamp;
};

// For each level and target: perturb, embed, search, aggregate to songs, and
// record whether the target's song appears in the top 1/5/10. Deterministic
// given the config seed.
RecallCurve robustness_sweep(const VectorIndex& idx, const ClipSource& clip_source,
                             const SweepConfig& cfg,
                             const std::vector<AudioBuffer>* external_partners = nullptr,
                             const std::vector<PromptVampPair>* prompt_vamp_pairs = nullptr);

struct StatBlock {
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;
    double max = 0.0;
    int n = 0;
};

struct CensusEntry {
    int count = 0;
    double pct = 0.0;
};

struct CensusRow {
    double threshold = 0.0;
    CensusEntry top1, top5, top10;
};

struct ModelEvalSummary {
    int n_queries = 0;
    std::optional<StatBlock> prompt_similarity;  // absent when no query has a prompt
    StatBlock top1_similarity;
    std::vector<CensusRow> census;
};

struct EvalQuery {
    std::string query_id;
    AudioBuffer audio;
    std::optional<AudioBuffer> prompt;
};

inline const std::vector<double> kDefaultCensusThresholds = {0.955, 0.935, 0.915, 0.895, 0.875};

// Run attribute() per query and tabulate prompt/top-1 similarity statistics
// plus, per threshold, how many queries have a top-1 / any-of-top-5 /
// any-of-top-10 song match at or above it. thresholds must be sorted
// descending.
ModelEvalSummary model_eval(const std::vector<EvalQuery>& queries, const VectorIndex& idx,
                            const std::vector<double>& thresholds,
                            const AttributeOptions& base_opts = {});

enum class ReportFormat { Json, Csv };

// "json" / "csv"; anything else is a ValidationError.
ReportFormat parse_report_format(const std::string& name);

// Deterministic serialization; emitting the same value twice is
// byte-identical.
void emit_report(const RecallCurve& curve, const std::string& path, ReportFormat format);
void emit_report(const ModelEvalSummary& summary, const std::string& path, ReportFormat format);

std::string curve_to_csv(const RecallCurve& curve);
std::string curve_to_json_string(const RecallCurve& curve);
std::string summary_to_csv(const ModelEvalSummary& summary);
std::string summary_to_json_string(const ModelEvalSummary& summary);

}  // namespace sonosim
