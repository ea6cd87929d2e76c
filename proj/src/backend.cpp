#include "ipcomp/backend.hpp"

#include <zlib.h>

#include <stdexcept>

namespace ipcomp {

std::uint32_t crc32_bytes(std::span<const std::uint8_t> bytes) {
    return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

namespace {

std::vector<std::uint8_t> deflate_bytes(std::span<const std::uint8_t> raw) {
    uLongf cap = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> out(cap);
    const int rc = ::compress2(out.data(), &cap, raw.data(), static_cast<uLong>(raw.size()), 6);
    if (rc != Z_OK) throw std::runtime_error("deflate backend failed to compress");
    out.resize(cap);
    return out;
}

std::vector<std::uint8_t> inflate_bytes(std::span<const std::uint8_t> payload, std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    uLongf len = static_cast<uLongf>(expected);
    const int rc = ::uncompress(out.data(), &len, payload.data(), static_cast<uLong>(payload.size()));
    if (rc != Z_OK || len != expected) throw std::runtime_error("deflate backend failed to decompress block");
    return out;
}

}  // namespace

EncodedBlock backend_encode(std::span<const std::uint8_t> raw, Backend preferred, std::uint64_t raw_bits) {
    if (raw.size() != static_cast<std::size_t>((raw_bits + 7) / 8)) {
        throw std::invalid_argument("raw byte length does not match bit count");
    }
    EncodedBlock block;
    block.raw_bits = raw_bits;
    if (preferred == Backend::deflate && !raw.empty()) {
        auto packed = deflate_bytes(raw);
        if (packed.size() < raw.size()) {
            block.backend = Backend::deflate;
            block.payload = std::move(packed);
            block.checksum = crc32_bytes(block.payload);
            return block;
        }
    }
    block.backend = Backend::identity;
    block.payload.assign(raw.begin(), raw.end());
    block.checksum = crc32_bytes(block.payload);
    return block;
}

std::vector<std::uint8_t> backend_decode(const EncodedBlock &block) {
    if (crc32_bytes(block.payload) != block.checksum) throw std::runtime_error("block checksum mismatch");
    switch (block.backend) {
        case Backend::identity:
            if (block.payload.size() != block.raw_bytes()) throw std::runtime_error("identity block has wrong length");
            return block.payload;
        case Backend::deflate:
            return inflate_bytes(block.payload, block.raw_bytes());
    }
    throw std::runtime_error("unknown backend id");
}

void write_block(ByteWriter &out, const EncodedBlock &block) {
    out.u8(static_cast<std::uint8_t>(block.backend));
    out.u64(block.raw_bits);
    out.u64(block.payload.size());
    out.u32(block.checksum);
    out.raw(block.payload.data(), block.payload.size());
}

EncodedBlock read_block(ByteReader &in) {
    EncodedBlock block;
    const std::uint8_t backend = in.u8();
    if (backend > 1) throw std::runtime_error("unknown backend id");
    block.backend = static_cast<Backend>(backend);
    block.raw_bits = in.u64();
    const std::uint64_t len = in.u64();
    block.checksum = in.u32();
    block.payload.resize(len);
    in.raw(block.payload.data(), len);
    return block;
}

}  // namespace ipcomp
