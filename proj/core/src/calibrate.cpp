#include "sonosim/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json_io.hpp"
#include "sonosim/errors.hpp"

namespace sonosim {
namespace {

constexpr int kMaxPromptRetries = 20;
constexpr std::array<std::pair<int, int>, 6> kBinPairs = {
    {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}}};

double sample_median(std::vector<double> values) {
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                     values.end());
    double m = values[mid];
    if (n % 2 == 0) {
        const auto lower =
            *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
        m = (m + lower) / 2.0;
    }
    return m;
}

// Seeded sample of k distinct ids from [0, n) by partial Fisher-Yates.
std::vector<std::size_t> sample_ids(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng() % (n - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(k);
    return ids;
}

long long to_micro(double v) { return std::llround(v * 1e6); }

}  // namespace

SimilarityDistribution sample_top_similarities(const VectorIndex& idx, int n_queries, int m,
                                               std::uint64_t seed, SearchMode mode) {
    if (m < 1 || n_queries < 1) {
        throw ValidationError("n_queries and m must be at least 1");
    }
    if (static_cast<std::size_t>(m) >= idx.size()) {
        throw ValidationError("m must be smaller than the index size");
    }
    if (static_cast<std::size_t>(n_queries) > idx.size()) {
        throw ValidationError("n_queries exceeds the index size");
    }

    std::mt19937_64 rng(seed);
    const auto query_ids = sample_ids(idx.size(), static_cast<std::size_t>(n_queries), rng);

    SimilarityDistribution dist;
    dist.source = SimilarityDistribution::Source::TopMPerQuery;
    dist.scores.reserve(static_cast<std::size_t>(n_queries) * m);
    for (std::size_t id : query_ids) {
        const Embedding q = idx.embedding(id);
        const ClipRecord& self = idx.record(id);
        const auto hits = idx.search_topk(q, m + 1, mode);
        int kept = 0;
        for (const auto& hit : hits) {
            if (hit.clip == self) continue;
            dist.scores.push_back(hit.score);
            if (++kept == m) break;
        }
    }
    return dist;
}

double random_pair_baseline(const VectorIndex& idx, int n, std::uint64_t seed) {
    if (n < 1) {
        throw ValidationError("baseline subset size must be at least 1");
    }
    if (idx.size() < 2 * static_cast<std::size_t>(n)) {
        throw ValidationError("index too small for two disjoint subsets of " +
                              std::to_string(n));
    }

    std::mt19937_64 rng(seed);
    const auto ids = sample_ids(idx.size(), 2 * static_cast<std::size_t>(n), rng);

    std::vector<Embedding> a, b;
    a.reserve(n);
    b.reserve(n);
    for (int i = 0; i < n; ++i) {
        a.push_back(idx.embedding(ids[static_cast<std::size_t>(i)]));
        b.push_back(idx.embedding(ids[static_cast<std::size_t>(n + i)]));
    }

    std::vector<double> sims;
    sims.reserve(static_cast<std::size_t>(n) * n);
    for (const auto& x : a) {
        for (const auto& y : b) {
            sims.push_back(cosine_similarity(x, y));
        }
    }
    return sample_median(std::move(sims));
}

std::pair<double, double> fit_gaussian(const SimilarityDistribution& dist) {
    if (dist.scores.size() < 2) {
        throw ValidationError("need at least two scores to fit");
    }
    const double median = sample_median(dist.scores);
    double mean = 0.0;
    for (double s : dist.scores) {
        mean += s;
    }
    mean /= static_cast<double>(dist.scores.size());
    double var = 0.0;
    for (double s : dist.scores) {
        var += (s - mean) * (s - mean);
    }
    var /= static_cast<double>(dist.scores.size());
    return {median, std::sqrt(var)};
}

CalibrationProfile make_bins(double median, double sd, double baseline) {
    if (!(sd >= 0.0)) {
        throw ValidationError("standard deviation must be non-negative");
    }
    // Micro-unit (1e-6) integer arithmetic keeps centers decimal-exact.
    const long long m = to_micro(median);
    const long long s = to_micro(sd);
    const long long b = to_micro(baseline);
    const long long halfwidth = 20000;  // 0.02

    if (s <= 2 * halfwidth) {
        throw ValidationError("bins overlap: standard deviation must exceed 0.04");
    }
    if (b >= m - 2 * halfwidth) {
        throw ValidationError("random baseline must sit more than 0.04 below the median");
    }

    CalibrationProfile p;
    p.median = static_cast<double>(m) / 1e6;
    p.sd = static_cast<double>(s) / 1e6;
    p.random_baseline = static_cast<double>(b) / 1e6;
    p.bin_centers = {static_cast<double>(m + 2 * s) / 1e6, static_cast<double>(m + s) / 1e6,
                     static_cast<double>(m) / 1e6, static_cast<double>(b) / 1e6};
    p.bin_halfwidth = static_cast<double>(halfwidth) / 1e6;
    p.high_similarity_threshold = static_cast<double>(m + 2 * s - halfwidth) / 1e6;
    return p;
}

std::vector<ABXTrial> generate_abx_trials(const VectorIndex& idx,
                                          const CalibrationProfile& profile, int n_prompts,
                                          std::uint64_t seed) {
    if (n_prompts < 1) {
        throw ValidationError("n_prompts must be at least 1");
    }
    if (idx.size() < 5) {
        throw ValidationError("index too small for ABX trial generation");
    }

    std::mt19937_64 rng(seed);
    std::unordered_set<std::size_t> used;
    std::vector<ABXTrial> trials;
    trials.reserve(static_cast<std::size_t>(n_prompts) * kBinPairs.size());

    int trial_seq = 0;
    for (int p = 0; p < n_prompts; ++p) {
        std::array<std::optional<ClipRecord>, 4> picks;
        std::optional<ClipRecord> prompt;

        bool found = false;
        for (int attempt = 0; attempt < kMaxPromptRetries && !found; ++attempt) {
            const std::size_t prompt_id = rng() % idx.size();
            if (used.count(prompt_id)) continue;
            const ClipRecord& prompt_rec = idx.record(prompt_id);
            const Embedding q = idx.embedding(prompt_id);

            // full ranked list: every stored clip from a different song
            const auto hits = idx.search_topk(q, static_cast<int>(idx.size()),
                                              SearchMode::Exact);
            std::array<std::vector<const Hit*>, 4> candidates;
            for (const auto& hit : hits) {
                if (hit.clip.song_id == prompt_rec.song_id) continue;
                for (int bin = 0; bin < 4; ++bin) {
                    if (std::abs(hit.score - profile.bin_centers[static_cast<std::size_t>(bin)]) <=
                        profile.bin_halfwidth) {
                        candidates[static_cast<std::size_t>(bin)].push_back(&hit);
                    }
                }
            }
            bool all_filled = true;
            for (int bin = 0; bin < 4; ++bin) {
                if (candidates[static_cast<std::size_t>(bin)].empty()) {
                    all_filled = false;
                    break;
                }
            }
            if (!all_filled) continue;

            for (int bin = 0; bin < 4; ++bin) {
                auto& pool = candidates[static_cast<std::size_t>(bin)];
                picks[static_cast<std::size_t>(bin)] = pool[rng() % pool.size()]->clip;
            }
            prompt = prompt_rec;
            used.insert(prompt_id);
            found = true;
        }
        if (!found) {
            throw ValidationError(
                "could not find a prompt with candidates in every bin after " +
                std::to_string(kMaxPromptRetries) + " draws");
        }

        for (const auto& [hi, lo] : kBinPairs) {
            ABXTrial t;
            char buf[32];
            std::snprintf(buf, sizeof(buf), "trial-%04d", trial_seq++);
            t.trial_id = buf;
            t.prompt = *prompt;
            t.clip_a = *picks[static_cast<std::size_t>(hi - 1)];
            t.clip_b = *picks[static_cast<std::size_t>(lo - 1)];
            t.bin_pair = {hi, lo};
            t.order = (rng() & 1) ? ABXTrial::Order::BA : ABXTrial::Order::AB;
            trials.push_back(std::move(t));
        }
    }
    return trials;
}

ABXCell ABXResultTable::row_total(int bin_a) const {
    ABXCell total;
    for (const auto& [pair, cell] : cells) {
        if (pair.first == bin_a) {
            total.n += cell.n;
            total.prefer_higher += cell.prefer_higher;
        }
    }
    return total;
}

int ABXResultTable::total_responses() const {
    int total = 0;
    for (const auto& [pair, cell] : cells) {
        total += cell.n;
    }
    return total;
}

ABXResultTable aggregate_abx(const std::vector<ABXTrial>& trials,
                             const std::vector<ABXResponse>& responses) {
    std::map<std::string, const ABXTrial*> by_id;
    for (const auto& t : trials) {
        by_id[t.trial_id] = &t;
    }

    ABXResultTable table;
    for (const auto& [hi, lo] : kBinPairs) {
        table.cells[{hi, lo}] = ABXCell{};
    }
    for (const auto& r : responses) {
        const auto it = by_id.find(r.trial_id);
        if (it == by_id.end()) {
            throw ValidationError("response references unknown trial_id: " + r.trial_id);
        }
        const ABXTrial& t = *it->second;
        const bool first_is_higher = t.order == ABXTrial::Order::AB;
        const bool chose_higher = (r.choice == ABXResponse::Choice::First) == first_is_higher;
        auto& cell = table.cells[t.bin_pair];
        ++cell.n;
        if (chose_higher) {
            ++cell.prefer_higher;
        }
    }
    return table;
}

void write_profile(const CalibrationProfile& profile, const std::string& path) {
    detail::ordered_json j{
        {"median", profile.median},
        {"sd", profile.sd},
        {"bin_centers", profile.bin_centers},
        {"bin_halfwidth", profile.bin_halfwidth},
        {"random_baseline", profile.random_baseline},
        {"high_similarity_threshold", profile.high_similarity_threshold}};
    detail::write_text_file(path, j.dump(2) + "\n");
}

CalibrationProfile read_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open profile: " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto j = detail::parse_json_line(text, path);
    CalibrationProfile p;
    try {
        p.median = j.at("median").get<double>();
        p.sd = j.at("sd").get<double>();
        const auto centers = j.at("bin_centers").get<std::vector<double>>();
        if (centers.size() != 4) {
            throw ValidationError("profile bin_centers must have 4 entries: " + path);
        }
        std::copy(centers.begin(), centers.end(), p.bin_centers.begin());
        p.bin_halfwidth = j.value("bin_halfwidth", 0.02);
        p.random_baseline = j.at("random_baseline").get<double>();
        p.high_similarity_threshold = j.at("high_similarity_threshold").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed profile " + path + ": " + e.what());
    }
    return p;
}

void write_trials(const std::vector<ABXTrial>& trials, const std::string& path) {
    std::string out;
    for (const auto& t : trials) {
        const ClipRecord& first = t.order == ABXTrial::Order::AB ? t.clip_a : t.clip_b;
        const ClipRecord& second = t.order == ABXTrial::Order::AB ? t.clip_b : t.clip_a;
        auto clip_ref = [](const ClipRecord& c) {
            return detail::ordered_json{{"song_id", c.song_id}, {"clip_index", c.clip_index}};
        };
        detail::ordered_json j{{"trial_id", t.trial_id},
                               {"prompt", clip_ref(t.prompt)},
                               {"first", clip_ref(first)},
                               {"second", clip_ref(second)},
                               {"bin_pair", {t.bin_pair.first, t.bin_pair.second}},
                               {"order", t.order == ABXTrial::Order::AB ? "AB" : "BA"}};
        out += j.dump();
        out += '\n';
    }
    detail::write_text_file(path, out);
}

std::vector<ABXTrial> read_trials(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open trial manifest: " + path);
    }
    std::vector<ABXTrial> trials;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = detail::parse_json_line(line, path);
        try {
            ABXTrial t;
            t.trial_id = j.at("trial_id").get<std::string>();
            auto clip_ref = [](const detail::ordered_json& c) {
                ClipRecord rec;
                rec.song_id = c.at("song_id").get<std::string>();
                rec.clip_index = c.at("clip_index").get<std::uint32_t>();
                rec.start_sec = rec.clip_index * kClipSeconds;
                rec.duration_sec = kClipSeconds;
                return rec;
            };
            t.prompt = clip_ref(j.at("prompt"));
            const auto order = j.at("order").get<std::string>();
            if (order != "AB" && order != "BA") {
                throw ValidationError("bad presentation order in " + path);
            }
            t.order = order == "AB" ? ABXTrial::Order::AB : ABXTrial::Order::BA;
            const ClipRecord first = clip_ref(j.at("first"));
            const ClipRecord second = clip_ref(j.at("second"));
            t.clip_a = t.order == ABXTrial::Order::AB ? first : second;
            t.clip_b = t.order == ABXTrial::Order::AB ? second : first;
            const auto pair = j.at("bin_pair").get<std::vector<int>>();
            if (pair.size() != 2 || pair[0] < 1 || pair[1] > 4 || pair[0] >= pair[1]) {
                throw ValidationError("bad bin_pair in " + path);
            }
            t.bin_pair = {pair[0], pair[1]};
            trials.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("malformed trial manifest " + path + ": " + e.what());
        }
    }
    return trials;
}

std::vector<ABXResponse> read_responses_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open response file: " + path);
    }
    std::vector<ABXResponse> responses;
    std::string line;
    bool first_line = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) continue;
        if (first_line) {
            first_line = false;
            if (line == "trial_id,choice") continue;  // header is optional but expected
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ValidationError("malformed response line (no comma): " + line);
        }
        ABXResponse r;
        r.trial_id = line.substr(0, comma);
        const std::string choice = line.substr(comma + 1);
        if (choice == "first") {
            r.choice = ABXResponse::Choice::First;
        } else if (choice == "second") {
            r.choice = ABXResponse::Choice::Second;
        } else {
            throw ValidationError("malformed response choice (expected first/second): " + choice);
        }
        if (r.trial_id.empty()) {
            throw ValidationError("malformed response line (empty trial_id)");
        }
        responses.push_back(std::move(r));
    }
    return responses;
}

std::string abx_table_to_json_string(const ABXResultTable& table) {
    detail::ordered_json cells = detail::ordered_json::array();
    for (const auto& [pair, cell] : table.cells) {
        detail::ordered_json c{{"bin_a", pair.first}, {"bin_b", pair.second}, {"n", cell.n}};
        if (cell.n > 0) {
            c["pct_prefer_a"] = cell.pct_prefer_higher();
        } else {
            c["pct_prefer_a"] = nullptr;
        }
        cells.push_back(std::move(c));
    }
    detail::ordered_json rows = detail::ordered_json::array();
    for (int bin = 1; bin <= 3; ++bin) {
        const ABXCell total = table.row_total(bin);
        detail::ordered_json r{{"bin_a", bin}, {"n", total.n}};
        if (total.n > 0) {
            r["pct_prefer_a"] = total.pct_prefer_higher();
        } else {
            r["pct_prefer_a"] = nullptr;
        }
        rows.push_back(std::move(r));
    }
    detail::ordered_json j{{"cells", cells},
                           {"row_totals", rows},
                           {"total_responses", table.total_responses()}};
    return j.dump(2) + "\n";
}

void write_abx_table(const ABXResultTable& table, const std::string& path) {
    detail::write_text_file(path, abx_table_to_json_string(table));
}

}  // namespace sonosim
