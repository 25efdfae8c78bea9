#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "sonosim/embed.hpp"
#include "sonosim/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "store serialization assumes a little-endian host");

namespace sonosim {
namespace {

constexpr char kMagic[4] = {'M', 'R', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 8;

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& data, std::size_t offset) {
    T v;
    std::memcpy(&v, data.data() + offset, sizeof(T));
    return v;
}

}  // namespace

void export_embeddings(const std::vector<std::pair<ClipRecord, Embedding>>& items,
                       const std::string& path) {
    if (items.empty()) {
        throw ValidationError("refusing to export an empty embedding store");
    }
    const int dim = items.front().second.dim();
    for (const auto& [rec, emb] : items) {
        if (emb.dim() != dim) {
            throw ValidationError("mixed embedding dimensions in export: " +
                                  std::to_string(emb.dim()) + " vs " + std::to_string(dim));
        }
    }

    std::string out;
    out.append(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(items.size()));
    for (const auto& [rec, emb] : items) {
        out.append(reinterpret_cast<const char*>(emb.values.data()),
                   emb.values.size() * sizeof(float));
    }
    const std::uint64_t trailer_offset = out.size();
    for (const auto& [rec, emb] : items) {
        out += detail::clip_to_json(rec).dump();
        out += '\n';
    }
    put<std::uint64_t>(out, trailer_offset);

    detail::write_text_file(path, out);
}

std::vector<std::pair<ClipRecord, Embedding>> import_embeddings(const std::string& path,
                                                                int expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open embedding store: " + path);
    }
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < kHeaderBytes + 8) {
        throw ValidationError("embedding store truncated: " + path);
    }
    if (std::memcmp(data.data(), kMagic, 4) != 0) {
        throw ValidationError("bad magic in embedding store: " + path);
    }
    if (get<std::uint32_t>(data, 4) != kVersion) {
        throw ValidationError("unsupported embedding store version in " + path);
    }
    const auto dim = get<std::uint32_t>(data, 8);
    const auto count = get<std::uint64_t>(data, 12);
    if (dim == 0 || count == 0) {
        throw ValidationError("embedding store declares no data: " + path);
    }
    if (expected_dim > 0 && dim != static_cast<std::uint32_t>(expected_dim)) {
        throw ValidationError("embedding store dimension " + std::to_string(dim) +
                              " does not match expected " + std::to_string(expected_dim));
    }

    const auto trailer_offset = get<std::uint64_t>(data, data.size() - 8);
    const std::uint64_t vectors_bytes =
        static_cast<std::uint64_t>(count) * dim * sizeof(float);
    if (trailer_offset != kHeaderBytes + vectors_bytes || trailer_offset > data.size() - 8) {
        throw ValidationError("embedding store count/payload mismatch: " + path);
    }

    std::vector<std::pair<ClipRecord, Embedding>> items;
    items.reserve(count);
    std::size_t pos = kHeaderBytes;
    for (std::uint64_t i = 0; i < count; ++i) {
        Embedding e;
        e.values.resize(dim);
        std::memcpy(e.values.data(), data.data() + pos, dim * sizeof(float));
        pos += dim * sizeof(float);
        items.emplace_back(ClipRecord{}, std::move(e));
    }

    std::istringstream trailer(
        data.substr(trailer_offset, data.size() - 8 - trailer_offset));
    std::string line;
    std::uint64_t parsed = 0;
    while (std::getline(trailer, line)) {
        if (line.empty()) continue;
        if (parsed >= count) {
            throw ValidationError("embedding store trailer has extra records: " + path);
        }
        items[parsed].first = detail::clip_from_json(detail::parse_json_line(line, path));
        ++parsed;
    }
    if (parsed != count) {
        throw ValidationError("embedding store trailer count mismatch (" +
                              std::to_string(parsed) + " of " + std::to_string(count) +
                              "): " + path);
    }
    return items;
}

}  // namespace sonosim
