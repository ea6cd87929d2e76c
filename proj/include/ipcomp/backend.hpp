#ifndef IPCOMP_BACKEND_HPP
#define IPCOMP_BACKEND_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "ipcomp/common.hpp"

namespace ipcomp {

enum class Backend : std::uint8_t { identity = 0, deflate = 1 };

inline constexpr Backend kDefaultBackend = Backend::deflate;

// one independently loadable unit: a bitplane (or merged-code array) run
// through a lossless byte backend, with enough metadata to verify and size the
// decoded output
struct EncodedBlock {
    Backend backend = Backend::identity;
    std::uint64_t raw_bits = 0;
    std::uint32_t checksum = 0;
    std::vector<std::uint8_t> payload;

    std::size_t raw_bytes() const { return static_cast<std::size_t>((raw_bits + 7) / 8); }
    std::size_t wire_size() const { return 21 + payload.size(); }
};

std::uint32_t crc32_bytes(std::span<const std::uint8_t> bytes);

// raw.size() must equal ceil(raw_bits/8); falls back to identity when the
// preferred backend does not shrink the input
EncodedBlock backend_encode(std::span<const std::uint8_t> raw, Backend preferred, std::uint64_t raw_bits);

std::vector<std::uint8_t> backend_decode(const EncodedBlock &block);

// wire layout, little-endian:
// backend u8 | raw bit count u64 | payload length u64 | crc32(payload) u32 | payload
void write_block(ByteWriter &out, const EncodedBlock &block);
EncodedBlock read_block(ByteReader &in);

}  // namespace ipcomp

#endif
