#ifndef IPCOMP_COMMON_HPP
#define IPCOMP_COMMON_HPP

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipcomp {

enum class ScalarKind : std::uint8_t { f32 = 0, f64 = 1 };
enum class InterpKind : std::uint8_t { linear = 0, cubic = 1 };

inline const char *name(ScalarKind k) { return k == ScalarKind::f32 ? "f32" : "f64"; }
inline const char *name(InterpKind k) { return k == InterpKind::linear ? "linear" : "cubic"; }
inline std::size_t scalar_width(ScalarKind k) { return k == ScalarKind::f32 ? 4 : 8; }

// a fidelity request that cannot be met by the archive (budget below the
// mandatory payload, or an error target below the compression bound)
struct InfeasibleRequest : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Dims = std::vector<std::size_t>;

inline std::size_t element_count(const Dims &dims) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

inline void validate_dims(const Dims &dims) {
    if (dims.empty() || dims.size() > 4) {
        throw std::invalid_argument("grid must have between 1 and 4 dimensions");
    }
    for (auto d : dims) {
        if (d < 1) throw std::invalid_argument("grid extents must be positive");
    }
}

// row-major: last dimension is contiguous
inline std::vector<std::size_t> row_strides(const Dims &dims) {
    std::vector<std::size_t> rs(dims.size());
    std::size_t acc = 1;
    for (std::size_t i = dims.size(); i-- > 0;) {
        rs[i] = acc;
        acc *= dims[i];
    }
    return rs;
}

// little-endian byte serialization, independent of host order
struct ByteWriter {
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const void *p, std::size_t n) {
        const auto *b = static_cast<const std::uint8_t *>(p);
        bytes.insert(bytes.end(), b, b + n);
    }

   private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
};

struct ByteReader {
    const std::uint8_t *data = nullptr;
    std::size_t size = 0;
    std::size_t pos = 0;

    ByteReader(const std::uint8_t *d, std::size_t n) : data(d), size(n) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    void raw(void *out, std::size_t n) {
        need(n);
        std::memcpy(out, data + pos, n);
        pos += n;
    }
    std::size_t remaining() const { return size - pos; }

   private:
    void need(std::size_t n) const {
        if (size - pos < n) throw std::runtime_error("truncated input while parsing");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
        pos += static_cast<std::size_t>(n);
        return v;
    }
};

}  // namespace ipcomp

#endif
