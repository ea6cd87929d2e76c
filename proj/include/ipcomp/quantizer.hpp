#ifndef IPCOMP_QUANTIZER_HPP
#define IPCOMP_QUANTIZER_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

namespace ipcomp {

inline constexpr std::int32_t kMaxCode = std::int32_t{1} << 30;
inline constexpr std::uint32_t kNegabinaryMask = 0xAAAAAAAAu;

inline double dequantize(std::int64_t code, double eb) { return 2.0 * eb * static_cast<double>(code); }

// round-half-away-from-zero bin of width 2*eb; nullopt means the value must be
// escaped and stored exactly (non-finite, out of code range, or the rounded
// reconstruction misses the bound)
inline std::optional<std::int32_t> quantize(double y, double eb) {
    if (!(eb > 0.0)) throw std::invalid_argument("error bound must be positive");
    if (!std::isfinite(y)) return std::nullopt;
    const double q = std::round(y / (2.0 * eb));
    if (!(std::fabs(q) <= static_cast<double>(kMaxCode))) return std::nullopt;
    const auto qi = static_cast<std::int32_t>(q);
    if (!(std::fabs(y - dequantize(qi, eb)) <= eb)) return std::nullopt;
    return qi;
}

inline std::uint32_t to_negabinary(std::int32_t q) {
    if (q > kMaxCode || q < -kMaxCode) throw std::domain_error("quantization code out of negabinary range");
    const auto shifted = static_cast<std::uint32_t>(static_cast<std::int64_t>(q) + static_cast<std::int64_t>(kNegabinaryMask));
    return shifted ^ kNegabinaryMask;
}

inline std::int32_t from_negabinary(std::uint32_t w) {
    return static_cast<std::int32_t>((w ^ kNegabinaryMask) - kNegabinaryMask);
}

// worst |value| of a dropped d-digit negabinary suffix, in code units:
// (2/3)*2^d - 1/3 for odd d, (2/3)*2^d - 2/3 for even d
inline std::int64_t suffix_uncertainty(int discarded_digits) {
    if (discarded_digits < 0 || discarded_digits > 32) throw std::domain_error("discarded digit count out of range");
    if (discarded_digits == 0) return 0;
    const std::int64_t p = std::int64_t{1} << (discarded_digits + 1);
    return (discarded_digits % 2 != 0) ? (p - 1) / 3 : (p - 2) / 3;
}

template <class T>
struct QuantizeOutcome {
    std::int32_t code;
    T recon;
    bool outlier;
};

// canonical reconstruction expression, shared by encoder and decoder: one
// double-precision multiply-add, one rounding to the field type
template <class T>
inline T reconstruct_value(T pred, double eb, std::int64_t code) {
    return static_cast<T>(static_cast<double>(pred) + 2.0 * eb * static_cast<double>(code));
}

// Quantize a value against its prediction, tracking the decoder's arithmetic.
// The rounded bin can miss the bound by an ulp, so the neighbouring bins are
// tried before escaping to an exact outlier.
template <class T>
inline QuantizeOutcome<T> quantize_residual(T value, T pred, double eb) {
    const double y = static_cast<double>(value) - static_cast<double>(pred);
    if (std::isfinite(y)) {
        const double q = std::round(y / (2.0 * eb));
        if (std::fabs(q) <= static_cast<double>(kMaxCode)) {
            const auto q0 = static_cast<std::int32_t>(q);
            for (std::int32_t cand : {q0, q0 - 1, q0 + 1}) {
                if (cand < -kMaxCode || cand > kMaxCode) continue;
                const T recon = reconstruct_value(pred, eb, cand);
                const double err = std::fabs(static_cast<double>(value) - static_cast<double>(recon));
                if (err <= eb) return {cand, recon, false};
            }
        }
    }
    return {0, value, true};
}

}  // namespace ipcomp

#endif
