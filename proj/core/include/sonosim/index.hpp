#pragma once

#include <cstdint>
#include <span>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sonosim/audio.hpp"
#include "sonosim/embed.hpp"

namespace sonosim {

struct IndexConfig {
    int M = 16;                // graph degree
    int ef_construction = 200; // build beam width
    int ef_search = 100;       // query beam width
    std::uint64_t seed = 0x5eedULL;
};

struct Hit {
    ClipRecord clip;
    double score = 0.0;
};

enum class SearchMode { Exact, Ann };

using SongMetaTable = std::map<std::string, SongMeta>;

// Append-only clip-level vector store answering exact brute-force and HNSW
// approximate top-k cosine queries. All stored vectors are unit-norm, so
// cosine similarity is the dot product. Builds are exclusive and
// deterministic given the config seed; searches are const and safe to run
// concurrently.
class VectorIndex {
public:
    // Throws ValidationError on an empty list, mixed dimensions, norms off
    // unit by more than 1e-3, or duplicate (song_id, clip_index) identities.
    static VectorIndex build(std::vector<std::pair<ClipRecord, Embedding>> items,
                             IndexConfig cfg = {});

    // Hits sorted by score descending, ties broken by (song_id, clip_index)
    // ascending. k > size returns everything. ef_override > 0 widens the ANN
    // beam for this query only.
    std::vector<Hit> search_topk(const Embedding& query, int k, SearchMode mode,
                                 int ef_override = 0) const;

    std::size_t size() const { return records_.size(); }
    int dim() const { return dim_; }
    const IndexConfig& config() const { return cfg_; }
    void set_ef_search(int ef);

    const ClipRecord& record(std::size_t id) const { return records_.at(id); }
    Embedding embedding(std::size_t id) const;

    // Song metadata travels with the index so attribution reports can carry
    // titles without a separate manifest. Missing songs get stub entries.
    void attach_song_meta(SongMetaTable meta);
    const SongMetaTable& song_meta() const { return meta_; }

    // Index file: magic "MRIX", version, config, dim, count, vector block,
    // clip records, song metadata, graph adjacency, CRC32 footer.
    void save(const std::string& path) const;
    static VectorIndex load(const std::string& path);

private:
    VectorIndex() = default;

    float dot(const float* a, std::size_t id) const;
    std::vector<std::pair<float, std::uint32_t>> search_layer(
        const float* q, std::span<const std::uint32_t> entries, int ef, int level) const;
    std::uint32_t greedy_descend(const float* q, std::uint32_t entry, int level) const;
    void insert_node(std::uint32_t id, int node_level);
    std::vector<std::uint32_t> select_neighbors(
        std::vector<std::pair<float, std::uint32_t>> candidates, int max_count) const;
    // Level 0 carries 4x density; random high-dimensional corpora need the
    // extra links for the default beam to reach its recall target.
    int max_degree(int level) const { return level == 0 ? 4 * cfg_.M : cfg_.M; }
    void shrink_links(std::uint32_t node, int level, int cap);
    void rebuild_meta_stubs();

    IndexConfig cfg_;
    int dim_ = 0;
    std::vector<ClipRecord> records_;
    std::vector<float> vectors_;  // row-major size() x dim_
    SongMetaTable meta_;

    // HNSW graph state
    std::vector<int> levels_;
    std::vector<std::vector<std::vector<std::uint32_t>>> neighbors_;  // [id][level]
    std::uint32_t entry_point_ = 0;
    int top_level_ = -1;
};

}  // namespace sonosim
