#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sonosim/index.hpp"

namespace sonosim {

struct SimilarityDistribution {
    enum class Source { TopMPerQuery, RandomPairs };
    std::vector<double> scores;
    Source source = Source::TopMPerQuery;
};

// Bin numbering follows the listening-test layout: Bin 1 is the highest
// similarity (median + 2 sd), Bin 4 the random-pair baseline.
struct CalibrationProfile {
    double median = 0.0;
    double sd = 0.0;
    std::array<double, 4> bin_centers{};     // [median+2sd, median+sd, median, baseline]
    double bin_halfwidth = 0.02;
    double random_baseline = 0.0;
    double high_similarity_threshold = 0.0;  // lower edge of Bin 1
};

// For n_queries seeded-random stored clips, pool the scores of each clip's
// top-m neighbors (self excluded by identity).
SimilarityDistribution sample_top_similarities(const VectorIndex& idx, int n_queries, int m,
                                               std::uint64_t seed,
                                               SearchMode mode = SearchMode::Exact);

// Median pairwise similarity between two disjoint seeded-random subsets of
// n clips each.
double random_pair_baseline(const VectorIndex& idx, int n, std::uint64_t seed);

// Sample median and population standard deviation.
std::pair<double, double> fit_gaussian(const SimilarityDistribution& dist);

// Bin centers [median+2sd, median+sd, median, baseline] with halfwidth 0.02.
// Inputs are quantized to 1e-6 and the centers derived in integer micro-units
// so reported values stay decimal-exact. Throws when sd <= 0.04 (overlapping
// bins) or the baseline is not more than 0.04 below the median.
CalibrationProfile make_bins(double median, double sd, double baseline);

struct ABXTrial {
    enum class Order { AB, BA };
    std::string trial_id;
    ClipRecord prompt;
    ClipRecord clip_a;  // higher-similarity bin
    ClipRecord clip_b;  // lower-similarity bin
    std::pair<int, int> bin_pair;  // 1-based, first < second
    Order order = Order::AB;
};

struct ABXResponse {
    enum class Choice { First, Second };
    std::string trial_id;
    Choice choice = Choice::First;
};

struct ABXCell {
    int n = 0;
    int prefer_higher = 0;

    double pct_prefer_higher() const {
        return n > 0 ? 100.0 * prefer_higher / n : 0.0;
    }
};

struct ABXResultTable {
    std::map<std::pair<int, int>, ABXCell> cells;  // keyed by bin pair

    ABXCell row_total(int bin_a) const;
    int total_responses() const;
};

// Per prompt: one candidate clip per bin (drawn from the prompt's ranked
// neighbor list, different song than the prompt), expanded into all 6 bin
// pairs with seeded-random presentation order. Prompts lacking a candidate
// in some bin are re-drawn up to 20 times before failing.
std::vector<ABXTrial> generate_abx_trials(const VectorIndex& idx,
                                          const CalibrationProfile& profile, int n_prompts,
                                          std::uint64_t seed);

// Un-shuffle presentation order and tabulate, per bin pair, how often the
// higher-similarity clip was chosen.
ABXResultTable aggregate_abx(const std::vector<ABXTrial>& trials,
                             const std::vector<ABXResponse>& responses);

void write_profile(const CalibrationProfile& profile, const std::string& path);
CalibrationProfile read_profile(const std::string& path);

void write_trials(const std::vector<ABXTrial>& trials, const std::string& path);
std::vector<ABXTrial> read_trials(const std::string& path);

// CSV with header "trial_id,choice"; choice is "first" or "second".
std::vector<ABXResponse> read_responses_csv(const std::string& path);

std::string abx_table_to_json_string(const ABXResultTable& table);
void write_abx_table(const ABXResultTable& table, const std::string& path);

}  // namespace sonosim
