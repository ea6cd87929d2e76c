#ifndef IPCOMP_ARCHIVE_HPP
#define IPCOMP_ARCHIVE_HPP

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "ipcomp/backend.hpp"
#include "ipcomp/common.hpp"

namespace ipcomp {

inline constexpr char kArchiveMagic[4] = {'I', 'P', 'C', '1'};
inline constexpr std::uint16_t kArchiveVersion = 1;

struct ArchiveHeader {
    std::uint16_t version = kArchiveVersion;
    ScalarKind scalar = ScalarKind::f64;
    InterpKind interp = InterpKind::cubic;
    Dims dims;
    double eb = 0.0;
    double range = 0.0;  // max - min of the original, for relative-error requests
    std::uint8_t levels = 0;
    std::uint8_t progressive_levels = 0;  // levels 1..L_p are bitplane-addressable
    std::uint8_t anchor_cap = 64;
    std::uint64_t payload_bytes = 0;  // derived from the block index, not serialized
};

struct PlaneEntry {
    std::uint64_t offset = 0;  // relative to payload start
    std::uint64_t length = 0;
};

struct LevelRecord {
    std::uint64_t count = 0;
    // measured information loss when the d low digits are dropped, d = 0..32;
    // delta[0] == 0 and the table is non-decreasing
    std::array<double, 33> delta{};
    std::uint64_t outlier_offset = 0;
    std::uint64_t outlier_length = 0;
    std::uint64_t outlier_count = 0;
    std::array<PlaneEntry, 32> planes{};
};

// records[l-1] describes level l (level 1 is the finest); serialized coarsest first
struct ArchiveData {
    ArchiveHeader header;
    std::vector<LevelRecord> records;
    std::vector<std::uint8_t> payload;
};

// header + records exactly as they appear at the front of the file; its crc32
// is the archive identity a retrieval session binds to
std::vector<std::uint8_t> serialize_index(const ArchiveHeader &header, std::span<const LevelRecord> records);
std::uint32_t archive_identity(const ArchiveData &archive);

void write_archive(std::ostream &out, const ArchiveData &archive);

// which planes to load per level: k[l-1] = number of MSB-first planes of level l
struct RetrievalPlan {
    std::vector<int> k;
};

// Parses the index without touching payload bytes, then serves individual
// blocks on demand. Block reads are accounted so callers can verify a plan's
// byte cost.
class ArchiveReader {
   public:
    explicit ArchiveReader(std::istream &in);

    const ArchiveHeader &header() const { return header_; }
    const LevelRecord &record(int level) const { return records_.at(static_cast<std::size_t>(level - 1)); }
    std::span<const LevelRecord> records() const { return records_; }
    std::uint32_t identity() const { return identity_; }
    std::uint64_t index_bytes() const { return payload_start_; }
    std::uint64_t payload_bytes_read() const { return payload_read_; }

    EncodedBlock load_plane(int level, int plane);
    std::vector<std::uint8_t> load_outlier_bytes(int level);

    template <class T>
    std::vector<std::pair<std::uint64_t, T>> load_outliers(int level) {
        const auto raw = load_outlier_bytes(level);
        const auto &rec = record(level);
        ByteReader br(raw.data(), raw.size());
        std::vector<std::pair<std::uint64_t, T>> out;
        out.reserve(rec.outlier_count);
        for (std::uint64_t i = 0; i < rec.outlier_count; ++i) {
            const std::uint64_t ordinal = br.u64();
            T value;
            if constexpr (sizeof(T) == 4) {
                value = static_cast<T>(br.f32());
            } else {
                value = static_cast<T>(br.f64());
            }
            out.emplace_back(ordinal, value);
        }
        return out;
    }

   private:
    std::vector<std::uint8_t> read_range(std::uint64_t offset, std::uint64_t length);

    std::istream &in_;
    ArchiveHeader header_;
    std::vector<LevelRecord> records_;
    std::uint64_t payload_start_ = 0;
    std::uint64_t payload_read_ = 0;
    std::uint32_t identity_ = 0;
};

void validate_plan(const ArchiveHeader &header, const RetrievalPlan &plan);

}  // namespace ipcomp

#endif
