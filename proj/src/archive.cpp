#include "ipcomp/archive.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace ipcomp {

namespace {

void check_header(const ArchiveHeader &h) {
    if (h.version != kArchiveVersion) throw std::runtime_error("unsupported archive version");
    validate_dims(h.dims);
    if (h.levels < 1) throw std::runtime_error("archive has no levels");
    if (h.progressive_levels < 1 || h.progressive_levels > h.levels) {
        throw std::runtime_error("progressive level bound out of range");
    }
    if (!(h.eb > 0.0) || !std::isfinite(h.eb)) throw std::runtime_error("archive error bound is not positive");
}

void check_record(const LevelRecord &rec) {
    if (rec.delta[0] != 0.0) throw std::runtime_error("loss table must start at zero");
    for (int d = 1; d <= 32; ++d) {
        if (!(rec.delta[d] >= rec.delta[d - 1])) throw std::runtime_error("loss table must be non-decreasing");
    }
}

}  // namespace

std::vector<std::uint8_t> serialize_index(const ArchiveHeader &header, std::span<const LevelRecord> records) {
    check_header(header);
    if (records.size() != header.levels) throw std::invalid_argument("record count does not match level count");

    ByteWriter w;
    w.raw(kArchiveMagic, 4);
    w.u16(header.version);
    w.u8(static_cast<std::uint8_t>(header.scalar));
    w.u8(static_cast<std::uint8_t>(header.interp));
    w.u8(static_cast<std::uint8_t>(header.dims.size()));
    w.u8(0);
    w.u8(0);
    w.u8(0);
    for (auto d : header.dims) w.u64(d);
    w.f64(header.eb);
    w.u8(header.levels);
    w.u8(header.progressive_levels);
    w.u8(header.anchor_cap);
    w.u8(0);
    w.f64(header.range);
    for (int level = header.levels; level >= 1; --level) {
        const LevelRecord &rec = records[static_cast<std::size_t>(level - 1)];
        check_record(rec);
        w.u64(rec.count);
        for (double d : rec.delta) w.f64(d);
        w.u64(rec.outlier_offset);
        w.u64(rec.outlier_length);
        w.u64(rec.outlier_count);
        for (const auto &p : rec.planes) {
            w.u64(p.offset);
            w.u64(p.length);
        }
    }
    return std::move(w.bytes);
}

std::uint32_t archive_identity(const ArchiveData &archive) {
    const auto index = serialize_index(archive.header, archive.records);
    return crc32_bytes(index);
}

void write_archive(std::ostream &out, const ArchiveData &archive) {
    for (const auto &rec : archive.records) {
        auto check_span = [&](std::uint64_t off, std::uint64_t len) {
            if (off + len > archive.payload.size()) throw std::invalid_argument("block offset outside payload");
        };
        check_span(rec.outlier_offset, rec.outlier_length);
        for (const auto &p : rec.planes) check_span(p.offset, p.length);
    }
    const auto index = serialize_index(archive.header, archive.records);
    out.write(reinterpret_cast<const char *>(index.data()), static_cast<std::streamsize>(index.size()));
    out.write(reinterpret_cast<const char *>(archive.payload.data()), static_cast<std::streamsize>(archive.payload.size()));
    if (!out) throw std::runtime_error("failed to write archive stream");
}

namespace {

// reads exactly n bytes, appending to the crc and byte count as it goes
struct IndexParser {
    std::istream &in;
    std::vector<std::uint8_t> consumed;

    void take(void *dst, std::size_t n) {
        const std::size_t at = consumed.size();
        consumed.resize(at + n);
        in.read(reinterpret_cast<char *>(consumed.data() + at), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) throw std::runtime_error("truncated archive index");
        if (dst != nullptr) std::memcpy(dst, consumed.data() + at, n);
    }
    std::uint8_t u8() {
        std::uint8_t b;
        take(&b, 1);
        return b;
    }
    std::uint64_t uint(int n) {
        std::uint8_t b[8];
        take(b, static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(uint(8)); }
};

}  // namespace

ArchiveReader::ArchiveReader(std::istream &in) : in_(in) {
    IndexParser p{in_, {}};
    char magic[4];
    p.take(magic, 4);
    if (std::memcmp(magic, kArchiveMagic, 4) != 0) throw std::runtime_error("not an archive: bad magic");
    header_.version = static_cast<std::uint16_t>(p.uint(2));
    if (header_.version != kArchiveVersion) throw std::runtime_error("unsupported archive version");
    const std::uint8_t scalar = p.u8();
    if (scalar > 1) throw std::runtime_error("unknown scalar kind");
    header_.scalar = static_cast<ScalarKind>(scalar);
    const std::uint8_t interp = p.u8();
    if (interp > 1) throw std::runtime_error("unknown interpolation kind");
    header_.interp = static_cast<InterpKind>(interp);
    const std::uint8_t ndims = p.u8();
    p.u8();
    p.u8();
    p.u8();
    if (ndims < 1 || ndims > 4) throw std::runtime_error("dimension count out of range");
    header_.dims.resize(ndims);
    for (auto &d : header_.dims) d = p.uint(8);
    header_.eb = p.f64();
    header_.levels = p.u8();
    header_.progressive_levels = p.u8();
    header_.anchor_cap = p.u8();
    p.u8();
    header_.range = p.f64();
    check_header(header_);

    records_.resize(header_.levels);
    for (int level = header_.levels; level >= 1; --level) {
        LevelRecord rec;
        rec.count = p.uint(8);
        for (auto &d : rec.delta) d = p.f64();
        rec.outlier_offset = p.uint(8);
        rec.outlier_length = p.uint(8);
        rec.outlier_count = p.uint(8);
        for (auto &pe : rec.planes) {
            pe.offset = p.uint(8);
            pe.length = p.uint(8);
        }
        check_record(rec);
        records_[static_cast<std::size_t>(level - 1)] = rec;
    }

    payload_start_ = p.consumed.size();
    identity_ = crc32_bytes(p.consumed);

    std::uint64_t end = 0;
    for (const auto &rec : records_) {
        end = std::max(end, rec.outlier_offset + rec.outlier_length);
        for (const auto &pe : rec.planes) end = std::max(end, pe.offset + pe.length);
    }
    header_.payload_bytes = end;
}

std::vector<std::uint8_t> ArchiveReader::read_range(std::uint64_t offset, std::uint64_t length) {
    if (offset + length > header_.payload_bytes) throw std::runtime_error("block offset outside payload");
    std::vector<std::uint8_t> bytes(length);
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(payload_start_ + offset));
    in_.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(length));
    if (static_cast<std::uint64_t>(in_.gcount()) != length) throw std::runtime_error("truncated archive payload");
    payload_read_ += length;
    return bytes;
}

EncodedBlock ArchiveReader::load_plane(int level, int plane) {
    if (plane < 0 || plane > 31) throw std::invalid_argument("plane index out of range");
    const auto &entry = record(level).planes[static_cast<std::size_t>(plane)];
    const auto bytes = read_range(entry.offset, entry.length);
    ByteReader br(bytes.data(), bytes.size());
    EncodedBlock block = read_block(br);
    if (br.remaining() != 0) throw std::runtime_error("plane block has trailing bytes");
    return block;
}

std::vector<std::uint8_t> ArchiveReader::load_outlier_bytes(int level) {
    const auto &rec = record(level);
    const std::uint64_t entry = 8 + scalar_width(header_.scalar);
    if (rec.outlier_length != rec.outlier_count * entry) {
        throw std::runtime_error("outlier block length does not match its count");
    }
    return read_range(rec.outlier_offset, rec.outlier_length);
}

void validate_plan(const ArchiveHeader &header, const RetrievalPlan &plan) {
    if (plan.k.size() != header.levels) throw std::invalid_argument("plan level count does not match archive");
    for (int level = 1; level <= header.levels; ++level) {
        const int k = plan.k[static_cast<std::size_t>(level - 1)];
        if (k < 0 || k > 32) throw std::invalid_argument("plan plane count out of range");
        if (level > header.progressive_levels && k != 32) {
            throw std::invalid_argument("non-progressive levels must load all planes");
        }
    }
}

}  // namespace ipcomp
