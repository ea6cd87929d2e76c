#ifndef IPCOMP_BITPLANE_HPP
#define IPCOMP_BITPLANE_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace ipcomp {

// Plane p holds negabinary digit 31-p of every codeword, so plane 0 is the most
// significant digit and an MSB-first prefix of planes is always decodable.
// Within a plane, bit i of codeword i is packed at byte i/8, bit position i%8.
struct BitplaneSet {
    std::size_t count = 0;
    std::array<std::vector<std::uint8_t>, 32> planes;
};

inline std::size_t plane_bytes(std::size_t count) { return (count + 7) / 8; }

BitplaneSet split(std::span<const std::uint32_t> codewords);

// codewords with only the first `planes_loaded` digits populated; the dropped
// low digits read as zero
std::vector<std::uint32_t> merge(const BitplaneSet &set, int planes_loaded);

// predictive coding across planes: e_p = b_p ^ b_{p-1} ^ b_{p-2}; in place
void xor_encode(BitplaneSet &set);

// inverse of xor_encode over the first `planes_present` planes; planes must be
// decoded MSB-first, each needs the two previous planes already decoded
void xor_decode(BitplaneSet &set, int planes_present);

// packed bit-vector of one digit position across merged codewords; used to
// resume xor decoding from a stored prefix
std::vector<std::uint8_t> extract_digit_plane(std::span<const std::uint32_t> codewords, int plane);

}  // namespace ipcomp

#endif
