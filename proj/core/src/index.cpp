#include "sonosim/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_set>

#include <zlib.h>

#include "json_io.hpp"
#include "sonosim/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "index serialization assumes a little-endian host");

namespace sonosim {
namespace {

constexpr char kMagic[4] = {'M', 'R', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;
constexpr int kShrinkSlack = 32;

// (score, id) orderings that are total, so heap behaviour is deterministic.
struct BetterFirst {
    bool operator()(const std::pair<float, std::uint32_t>& a,
                    const std::pair<float, std::uint32_t>& b) const {
        if (a.first != b.first) return a.first < b.first;  // max-heap on score
        return a.second > b.second;
    }
};

struct WorseFirst {
    bool operator()(const std::pair<float, std::uint32_t>& a,
                    const std::pair<float, std::uint32_t>& b) const {
        if (a.first != b.first) return a.first > b.first;  // min-heap on score
        return a.second < b.second;
    }
};

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    Reader(const std::string& data, std::string path)
        : data_(data), path_(std::move(path)) {}

    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > data_.size()) {
            throw ValidationError("corrupt index file (truncated): " + path_);
        }
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string get_bytes(std::size_t n) {
        if (pos_ + n > data_.size()) {
            throw ValidationError("corrupt index file (truncated): " + path_);
        }
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    void read_floats(float* dst, std::size_t n) {
        if (pos_ + n * sizeof(float) > data_.size()) {
            throw ValidationError("corrupt index file (truncated): " + path_);
        }
        std::memcpy(dst, data_.data() + pos_, n * sizeof(float));
        pos_ += n * sizeof(float);
    }

    std::size_t pos() const { return pos_; }

private:
    const std::string& data_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

float VectorIndex::dot(const float* a, std::size_t id) const {
    const float* b = vectors_.data() + id * static_cast<std::size_t>(dim_);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int i = 0;
    for (; i + 4 <= dim_; i += 4) {
        s0 += static_cast<double>(a[i]) * b[i];
        s1 += static_cast<double>(a[i + 1]) * b[i + 1];
        s2 += static_cast<double>(a[i + 2]) * b[i + 2];
        s3 += static_cast<double>(a[i + 3]) * b[i + 3];
    }
    for (; i < dim_; ++i) {
        s0 += static_cast<double>(a[i]) * b[i];
    }
    return static_cast<float>((s0 + s1) + (s2 + s3));
}

std::uint32_t VectorIndex::greedy_descend(const float* q, std::uint32_t entry, int level) const {
    std::uint32_t best = entry;
    float best_score = dot(q, best);
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::uint32_t nb : neighbors_[best][level]) {
            const float s = dot(q, nb);
            if (s > best_score || (s == best_score && nb < best)) {
                best_score = s;
                best = nb;
                improved = true;
            }
        }
    }
    return best;
}

std::vector<std::pair<float, std::uint32_t>> VectorIndex::search_layer(
    const float* q, std::span<const std::uint32_t> entries, int ef, int level) const {
    std::priority_queue<std::pair<float, std::uint32_t>,
                        std::vector<std::pair<float, std::uint32_t>>, BetterFirst>
        candidates;
    std::priority_queue<std::pair<float, std::uint32_t>,
                        std::vector<std::pair<float, std::uint32_t>>, WorseFirst>
        best;
    std::vector<std::uint8_t> visited(records_.size(), 0);

    for (std::uint32_t entry : entries) {
        if (visited[entry]) continue;
        visited[entry] = 1;
        const float entry_score = dot(q, entry);
        candidates.emplace(entry_score, entry);
        best.emplace(entry_score, entry);
        if (static_cast<int>(best.size()) > ef) {
            best.pop();
        }
    }

    while (!candidates.empty()) {
        const auto [score, node] = candidates.top();
        candidates.pop();
        if (static_cast<int>(best.size()) >= ef && score < best.top().first) {
            break;
        }
        for (std::uint32_t nb : neighbors_[node][level]) {
            if (visited[nb]) continue;
            visited[nb] = 1;
            const float s = dot(q, nb);
            if (static_cast<int>(best.size()) < ef || s > best.top().first) {
                candidates.emplace(s, nb);
                best.emplace(s, nb);
                if (static_cast<int>(best.size()) > ef) {
                    best.pop();
                }
            }
        }
    }

    std::vector<std::pair<float, std::uint32_t>> out;
    out.reserve(best.size());
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    return out;
}

std::vector<std::uint32_t> VectorIndex::select_neighbors(
    std::vector<std::pair<float, std::uint32_t>> candidates, int max_count) const {
    // Heuristic selection: keep a candidate only if it is closer to the new
    // point than to every already-selected neighbor, then backfill with the
    // best pruned candidates.
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::uint32_t> selected;
    std::vector<std::pair<float, std::uint32_t>> pruned;
    for (const auto& [score, id] : candidates) {
        if (static_cast<int>(selected.size()) >= max_count) break;
        const float* cand = vectors_.data() + static_cast<std::size_t>(id) * dim_;
        bool keep = true;
        for (std::uint32_t r : selected) {
            if (dot(cand, r) > score) {
                keep = false;
                break;
            }
        }
        if (keep) {
            selected.push_back(id);
        } else {
            pruned.emplace_back(score, id);
        }
    }
    for (const auto& [score, id] : pruned) {
        if (static_cast<int>(selected.size()) >= max_count) break;
        selected.push_back(id);
    }
    return selected;
}

void VectorIndex::shrink_links(std::uint32_t node, int level, int cap) {
    auto& links = neighbors_[node][level];
    if (static_cast<int>(links.size()) <= cap) {
        return;
    }
    const float* vec = vectors_.data() + static_cast<std::size_t>(node) * dim_;
    std::vector<std::pair<float, std::uint32_t>> cands;
    cands.reserve(links.size());
    for (std::uint32_t x : links) {
        cands.emplace_back(dot(vec, x), x);
    }
    links = select_neighbors(std::move(cands), cap);
}

void VectorIndex::insert_node(std::uint32_t id, int node_level) {
    neighbors_[id].assign(node_level + 1, {});
    if (top_level_ < 0) {
        entry_point_ = id;
        top_level_ = node_level;
        return;
    }

    const float* q = vectors_.data() + static_cast<std::size_t>(id) * dim_;
    std::vector<std::uint32_t> entries = {entry_point_};
    for (int level = top_level_; level > node_level; --level) {
        entries[0] = greedy_descend(q, entries[0], level);
    }

    for (int level = std::min(top_level_, node_level); level >= 0; --level) {
        auto found = search_layer(q, entries, cfg_.ef_construction, level);
        const auto selected = select_neighbors(found, max_degree(level));
        for (std::uint32_t nb : selected) {
            neighbors_[id][level].push_back(nb);
            auto& back = neighbors_[nb][level];
            back.push_back(id);
            // prune lazily with slack; the final pass trims to the cap
            if (static_cast<int>(back.size()) > max_degree(level) + kShrinkSlack) {
                shrink_links(nb, level, max_degree(level));
            }
        }
        // the whole beam feeds the next layer down
        entries.clear();
        for (const auto& [score, node] : found) {
            entries.push_back(node);
        }
        if (entries.empty()) {
            entries.push_back(entry_point_);
        }
    }

    if (node_level > top_level_) {
        entry_point_ = id;
        top_level_ = node_level;
    }
}

VectorIndex VectorIndex::build(std::vector<std::pair<ClipRecord, Embedding>> items,
                               IndexConfig cfg) {
    if (items.empty()) {
        throw ValidationError("cannot build an index from an empty list");
    }
    if (cfg.M < 2) {
        throw ValidationError("index config requires M >= 2");
    }
    if (cfg.ef_construction < 1 || cfg.ef_search < 1) {
        throw ValidationError("index beam widths must be positive");
    }

    VectorIndex idx;
    idx.cfg_ = cfg;
    idx.dim_ = items.front().second.dim();
    if (idx.dim_ <= 0) {
        throw ValidationError("embeddings must have positive dimension");
    }

    const std::size_t n = items.size();
    idx.records_.reserve(n);
    idx.vectors_.resize(n * static_cast<std::size_t>(idx.dim_));
    std::unordered_set<std::string> seen;
    seen.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& [rec, emb] = items[i];
        if (emb.dim() != idx.dim_) {
            throw ValidationError("mixed embedding dimensions at entry " + std::to_string(i));
        }
        double norm_sq = 0.0;
        for (float v : emb.values) {
            if (!std::isfinite(v)) {
                throw ValidationError("non-finite embedding value at entry " + std::to_string(i));
            }
            norm_sq += static_cast<double>(v) * v;
        }
        if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-3) {
            throw ValidationError("embedding at entry " + std::to_string(i) +
                                  " is not unit-norm");
        }
        const std::string key = rec.song_id + "\x1f" + std::to_string(rec.clip_index);
        if (!seen.insert(key).second) {
            throw ValidationError("duplicate clip identity: " + rec.song_id + "#" +
                                  std::to_string(rec.clip_index));
        }
        std::memcpy(idx.vectors_.data() + i * static_cast<std::size_t>(idx.dim_),
                    emb.values.data(), static_cast<std::size_t>(idx.dim_) * sizeof(float));
        idx.records_.push_back(rec);
    }

    // level assignment: floor(-ln(U) * mL), mL = 1 / ln(M)
    std::mt19937_64 rng(cfg.seed);
    const double ml = 1.0 / std::log(static_cast<double>(cfg.M));
    idx.levels_.resize(n);
    idx.neighbors_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
        idx.levels_[i] = static_cast<int>(-std::log(u) * ml);
    }
    for (std::size_t i = 0; i < n; ++i) {
        idx.insert_node(static_cast<std::uint32_t>(i), idx.levels_[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (int level = 1; level <= idx.levels_[i]; ++level) {
            idx.shrink_links(static_cast<std::uint32_t>(i), level, idx.max_degree(level));
        }
    }

    idx.rebuild_meta_stubs();
    return idx;
}

void VectorIndex::rebuild_meta_stubs() {
    std::map<std::string, double> extent;
    for (const auto& rec : records_) {
        double& d = extent[rec.song_id];
        d = std::max(d, rec.start_sec + rec.duration_sec);
    }
    for (const auto& [song_id, dur] : extent) {
        if (!meta_.count(song_id)) {
            SongMeta m;
            m.song_id = song_id;
            m.total_duration_sec = dur;
            meta_[song_id] = std::move(m);
        }
    }
}

void VectorIndex::attach_song_meta(SongMetaTable meta) {
    meta_ = std::move(meta);
    rebuild_meta_stubs();
}

void VectorIndex::set_ef_search(int ef) {
    if (ef < 1) {
        throw ValidationError("ef_search must be positive");
    }
    cfg_.ef_search = ef;
}

Embedding VectorIndex::embedding(std::size_t id) const {
    if (id >= records_.size()) {
        throw ValidationError("entry id out of range");
    }
    Embedding e;
    e.values.assign(vectors_.begin() + static_cast<std::ptrdiff_t>(id * dim_),
                    vectors_.begin() + static_cast<std::ptrdiff_t>((id + 1) * dim_));
    return e;
}

std::vector<Hit> VectorIndex::search_topk(const Embedding& query, int k, SearchMode mode,
                                          int ef_override) const {
    if (records_.empty()) {
        throw ValidationError("cannot search an empty index");
    }
    if (query.dim() != dim_) {
        throw ValidationError("query dimension " + std::to_string(query.dim()) +
                              " does not match index dimension " + std::to_string(dim_));
    }
    if (k < 1) {
        throw ValidationError("k must be at least 1");
    }

    const float* q = query.values.data();
    std::vector<std::pair<float, std::uint32_t>> scored;

    if (mode == SearchMode::Exact) {
        scored.reserve(records_.size());
        for (std::size_t i = 0; i < records_.size(); ++i) {
            scored.emplace_back(dot(q, i), static_cast<std::uint32_t>(i));
        }
    } else {
        const int ef = std::max(ef_override > 0 ? ef_override : cfg_.ef_search, k);
        std::uint32_t ep = entry_point_;
        for (int level = top_level_; level > 0; --level) {
            ep = greedy_descend(q, ep, level);
        }
        const std::uint32_t entry[1] = {ep};
        scored = search_layer(q, entry, ef, 0);
    }

    auto better = [this](const std::pair<float, std::uint32_t>& a,
                         const std::pair<float, std::uint32_t>& b) {
        if (a.first != b.first) return a.first > b.first;
        return clip_identity_less(records_[a.second], records_[b.second]);
    };
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                      scored.end(), better);
    scored.resize(keep);

    std::vector<Hit> hits;
    hits.reserve(scored.size());
    for (const auto& [score, id] : scored) {
        hits.push_back(Hit{records_[id], static_cast<double>(score)});
    }
    return hits;
}

void VectorIndex::save(const std::string& path) const {
    std::string out;
    out.append(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::int32_t>(out, cfg_.M);
    put<std::int32_t>(out, cfg_.ef_construction);
    put<std::int32_t>(out, cfg_.ef_search);
    put<std::uint64_t>(out, cfg_.seed);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(records_.size()));

    out.append(reinterpret_cast<const char*>(vectors_.data()),
               vectors_.size() * sizeof(float));

    std::string records_block;
    for (const auto& rec : records_) {
        records_block += detail::clip_to_json(rec).dump();
        records_block += '\n';
    }
    put<std::uint64_t>(out, records_block.size());
    out += records_block;

    std::string meta_block;
    for (const auto& [song_id, m] : meta_) {
        meta_block += detail::ordered_json{{"song_id", m.song_id},
                                           {"title", m.title},
                                           {"artist", m.artist},
                                           {"source_path", m.source_path},
                                           {"total_duration_sec", m.total_duration_sec}}
                          .dump();
        meta_block += '\n';
    }
    put<std::uint64_t>(out, meta_block.size());
    out += meta_block;

    put<std::int32_t>(out, top_level_);
    put<std::uint32_t>(out, entry_point_);
    for (std::size_t i = 0; i < records_.size(); ++i) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(levels_[i]));
        for (int level = 0; level <= levels_[i]; ++level) {
            const auto& nbs = neighbors_[i][level];
            put<std::uint32_t>(out, static_cast<std::uint32_t>(nbs.size()));
            for (std::uint32_t nb : nbs) {
                put<std::uint32_t>(out, nb);
            }
        }
    }

    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size())));
    put<std::uint32_t>(out, crc);

    detail::write_text_file(path, out);
}

VectorIndex VectorIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open index file: " + path);
    }
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < 4 + 4 + 4) {
        throw ValidationError("corrupt index file (too small): " + path);
    }
    const auto stored_crc_offset = data.size() - 4;
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, data.data() + stored_crc_offset, 4);
    const auto computed = static_cast<std::uint32_t>(crc32(
        0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(stored_crc_offset)));
    if (stored_crc != computed) {
        throw ValidationError("corrupt index file (checksum mismatch): " + path);
    }

    Reader r(data, path);
    if (r.get_bytes(4) != std::string(kMagic, 4)) {
        throw ValidationError("bad magic in index file: " + path);
    }
    if (r.get<std::uint32_t>() != kVersion) {
        throw ValidationError("unsupported index file version: " + path);
    }

    VectorIndex idx;
    idx.cfg_.M = r.get<std::int32_t>();
    idx.cfg_.ef_construction = r.get<std::int32_t>();
    idx.cfg_.ef_search = r.get<std::int32_t>();
    idx.cfg_.seed = r.get<std::uint64_t>();
    idx.dim_ = static_cast<int>(r.get<std::uint32_t>());
    const auto count = r.get<std::uint64_t>();
    if (idx.dim_ <= 0 || count == 0) {
        throw ValidationError("index file declares no data: " + path);
    }

    idx.vectors_.resize(count * static_cast<std::size_t>(idx.dim_));
    r.read_floats(idx.vectors_.data(), idx.vectors_.size());

    const auto records_bytes = r.get<std::uint64_t>();
    {
        std::istringstream block(r.get_bytes(records_bytes));
        std::string line;
        while (std::getline(block, line)) {
            if (line.empty()) continue;
            idx.records_.push_back(detail::clip_from_json(detail::parse_json_line(line, path)));
        }
    }
    if (idx.records_.size() != count) {
        throw ValidationError("index record count mismatch: " + path);
    }

    const auto meta_bytes = r.get<std::uint64_t>();
    {
        std::istringstream block(r.get_bytes(meta_bytes));
        std::string line;
        while (std::getline(block, line)) {
            if (line.empty()) continue;
            const auto j = detail::parse_json_line(line, path);
            SongMeta m;
            m.song_id = j.at("song_id").get<std::string>();
            m.title = j.value("title", std::string{});
            m.artist = j.value("artist", std::string{});
            m.source_path = j.value("source_path", std::string{});
            m.total_duration_sec = j.value("total_duration_sec", 0.0);
            idx.meta_[m.song_id] = std::move(m);
        }
    }

    idx.top_level_ = r.get<std::int32_t>();
    idx.entry_point_ = r.get<std::uint32_t>();
    idx.levels_.resize(count);
    idx.neighbors_.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto node_level = static_cast<int>(r.get<std::uint32_t>());
        idx.levels_[i] = node_level;
        idx.neighbors_[i].assign(node_level + 1, {});
        for (int level = 0; level <= node_level; ++level) {
            const auto deg = r.get<std::uint32_t>();
            auto& nbs = idx.neighbors_[i][level];
            nbs.resize(deg);
            for (std::uint32_t d = 0; d < deg; ++d) {
                nbs[d] = r.get<std::uint32_t>();
                if (nbs[d] >= count) {
                    throw ValidationError("corrupt index file (bad neighbor id): " + path);
                }
            }
        }
    }

    idx.rebuild_meta_stubs();
    return idx;
}

}  // namespace sonosim
