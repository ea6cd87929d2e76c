#include "ipcomp/bitplane.hpp"

#include <stdexcept>

namespace ipcomp {

BitplaneSet split(std::span<const std::uint32_t> codewords) {
    BitplaneSet set;
    set.count = codewords.size();
    const std::size_t nbytes = plane_bytes(set.count);
    for (auto &p : set.planes) p.assign(nbytes, 0);
    for (std::size_t i = 0; i < codewords.size(); ++i) {
        const std::uint32_t w = codewords[i];
        if (w == 0) continue;
        const std::size_t byte = i >> 3;
        const std::uint8_t bit = static_cast<std::uint8_t>(1u << (i & 7));
        for (int p = 0; p < 32; ++p) {
            if ((w >> (31 - p)) & 1u) set.planes[p][byte] |= bit;
        }
    }
    return set;
}

std::vector<std::uint32_t> merge(const BitplaneSet &set, int planes_loaded) {
    if (planes_loaded < 0 || planes_loaded > 32) throw std::invalid_argument("plane count out of range");
    std::vector<std::uint32_t> codes(set.count, 0);
    for (int p = 0; p < planes_loaded; ++p) {
        const auto &plane = set.planes[p];
        if (plane.size() < plane_bytes(set.count)) throw std::invalid_argument("plane missing from set");
        const std::uint32_t digit = 1u << (31 - p);
        for (std::size_t i = 0; i < set.count; ++i) {
            if ((plane[i >> 3] >> (i & 7)) & 1u) codes[i] |= digit;
        }
    }
    return codes;
}

namespace {
void xor_into(std::vector<std::uint8_t> &dst, const std::vector<std::uint8_t> &src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
}
}  // namespace

void xor_encode(BitplaneSet &set) {
    for (int p = 31; p >= 1; --p) {
        xor_into(set.planes[p], set.planes[p - 1]);
        if (p >= 2) xor_into(set.planes[p], set.planes[p - 2]);
    }
}

void xor_decode(BitplaneSet &set, int planes_present) {
    if (planes_present < 0 || planes_present > 32) throw std::invalid_argument("plane count out of range");
    const std::size_t nbytes = plane_bytes(set.count);
    for (int p = 0; p < planes_present; ++p) {
        if (set.planes[p].size() < nbytes) throw std::invalid_argument("plane missing while decoding prefix");
        if (p >= 1) xor_into(set.planes[p], set.planes[p - 1]);
        if (p >= 2) xor_into(set.planes[p], set.planes[p - 2]);
    }
}

std::vector<std::uint8_t> extract_digit_plane(std::span<const std::uint32_t> codewords, int plane) {
    if (plane < 0 || plane > 31) throw std::invalid_argument("plane index out of range");
    std::vector<std::uint8_t> out(plane_bytes(codewords.size()), 0);
    for (std::size_t i = 0; i < codewords.size(); ++i) {
        if ((codewords[i] >> (31 - plane)) & 1u) out[i >> 3] |= static_cast<std::uint8_t>(1u << (i & 7));
    }
    return out;
}

}  // namespace ipcomp
