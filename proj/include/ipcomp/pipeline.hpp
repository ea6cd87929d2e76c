#ifndef IPCOMP_PIPELINE_HPP
#define IPCOMP_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ipcomp/archive.hpp"
#include "ipcomp/backend.hpp"
#include "ipcomp/bitplane.hpp"
#include "ipcomp/grid.hpp"
#include "ipcomp/parallel.hpp"
#include "ipcomp/planner.hpp"
#include "ipcomp/predictor.hpp"
#include "ipcomp/quantizer.hpp"
#include "ipcomp/session.hpp"

namespace ipcomp {

template <class T>
constexpr ScalarKind scalar_kind_of() {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8, "field scalars must be f32 or f64");
    return sizeof(T) == 4 ? ScalarKind::f32 : ScalarKind::f64;
}

struct CompressOptions {
    double eb = 0.0;
    InterpKind interp = InterpKind::cubic;
    int progressive_levels = 0;  // 0 selects every level
    std::size_t anchor_cap = kDefaultAnchorStrideCap;
};

struct ReconstructStats {
    std::vector<int> level_visits;
    std::uint64_t payload_bytes_loaded = 0;
};

template <class T>
struct Retrieved {
    std::vector<T> values;
    RetrievalSession session;
    ReconstructStats stats;
};

struct FieldMetrics {
    double max_error = 0.0;
    double mse = 0.0;
    double psnr = 0.0;
};

namespace detail {

// Reconstruct one level in place: interpolate each target from the current
// state, add its dequantized code, and overwrite escaped points with their
// exact stored value before later passes read them. Compression mirrors this
// arithmetic exactly, so encoder and decoder states stay bit-identical.
template <class T>
void apply_level(std::vector<T> &state, const LevelTraversal &lt, int level, InterpKind kind, double eb,
                 const std::vector<std::int32_t> &codes, const std::vector<std::pair<std::uint64_t, T>> &outliers) {
    const std::size_t s = lt.stride(level);
    const bool coarsest = level == lt.levels();
    std::size_t i = 0, oi = 0;
    auto at = [&](std::size_t j) { return state[j]; };
    lt.for_each(level, [&](const LevelPoint &pt) {
        const T pred = coarsest ? T(0) : predict_point<T>(at, pt, s, kind);
        T v = reconstruct_value(pred, eb, codes[i]);
        if (oi < outliers.size() && outliers[oi].first == i) {
            v = outliers[oi].second;
            ++oi;
        }
        state[pt.flat] = v;
        ++i;
    });
}

// Worst value deviation at this level's own points when its d low digits are
// dropped, for every d. Truncation error injected at early passes rides into
// later passes of the same level through the interpolator, so the loss is
// replayed on a deviation field rather than read off the code suffixes alone.
// The table is forced non-decreasing; planning only ever rounds up.
inline std::array<double, 33> measure_loss_table(const LevelTraversal &lt, int level, InterpKind kind, double eb,
                                                 std::span<const std::int32_t> codes,
                                                 std::span<const std::uint32_t> negabinary,
                                                 std::vector<std::vector<double>> &scratch) {
    std::array<double, 33> table{};
    std::uint32_t low_or = 0;
    for (std::uint32_t w : negabinary) low_or |= w;

    const std::size_t n = lt.size();
    const bool coarsest = level == lt.levels();
    const std::size_t s = lt.stride(level);
    const double unit = 2.0 * eb;

    std::array<double, 33> raw{};
    parallel_for(32, static_cast<int>(scratch.size()), [&](std::size_t job, int worker) {
        const int d = static_cast<int>(job) + 1;
        const std::uint32_t low_mask = d == 32 ? 0xFFFFFFFFu : ((1u << d) - 1u);
        if ((low_or & low_mask) == 0) return;  // nothing dropped, loss stays zero

        auto &dev = scratch[static_cast<std::size_t>(worker)];
        if (dev.size() != n) dev.assign(n, 0.0);

        double worst = 0.0;
        std::size_t i = 0;
        auto at = [&](std::size_t j) { return dev[j]; };
        lt.for_each(level, [&](const LevelPoint &pt) {
            const std::int64_t truncated = from_negabinary(negabinary[i] & ~low_mask);
            const double own = unit * static_cast<double>(truncated - codes[i]);
            const double v = coarsest ? own : predict_point<double>(at, pt, s, kind) + own;
            dev[pt.flat] = v;
            worst = std::max(worst, std::fabs(v));
            ++i;
        });
        lt.for_each(level, [&](const LevelPoint &pt) { dev[pt.flat] = 0.0; });
        raw[static_cast<std::size_t>(d)] = worst;
    });

    for (int d = 1; d <= 32; ++d) table[static_cast<std::size_t>(d)] = std::max(table[static_cast<std::size_t>(d - 1)], raw[static_cast<std::size_t>(d)]);
    return table;
}

template <class T>
void append_outlier_block(ByteWriter &w, std::span<const std::pair<std::uint64_t, T>> outliers) {
    for (const auto &[ordinal, value] : outliers) {
        w.u64(ordinal);
        if constexpr (sizeof(T) == 4) {
            w.f32(static_cast<float>(value));
        } else {
            w.f64(static_cast<double>(value));
        }
    }
}

}  // namespace detail

template <class T>
ArchiveData compress_field(std::span<const T> values, const Dims &dims, const CompressOptions &opt) {
    validate_dims(dims);
    if (values.size() != element_count(dims)) throw std::invalid_argument("value count does not match dimensions");
    if (!(opt.eb > 0.0) || !std::isfinite(opt.eb)) throw std::invalid_argument("error bound must be positive and finite");

    LevelTraversal lt(dims, max_levels_for_cap(opt.anchor_cap));
    const int levels = lt.levels();
    int lp = opt.progressive_levels == 0 ? levels : opt.progressive_levels;
    if (lp < 1 || lp > levels) throw std::invalid_argument("first progressive level out of range");

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const T v : values) {
        lo = std::min(lo, static_cast<double>(v));
        hi = std::max(hi, static_cast<double>(v));
    }

    ArchiveData archive;
    archive.header.scalar = scalar_kind_of<T>();
    archive.header.interp = opt.interp;
    archive.header.dims = dims;
    archive.header.eb = opt.eb;
    archive.header.range = hi - lo;
    archive.header.levels = static_cast<std::uint8_t>(levels);
    archive.header.progressive_levels = static_cast<std::uint8_t>(lp);
    archive.header.anchor_cap = static_cast<std::uint8_t>(opt.anchor_cap);
    archive.records.resize(static_cast<std::size_t>(levels));

    std::vector<T> state(values.size(), T(0));
    std::vector<std::vector<double>> scratch(static_cast<std::size_t>(std::min(thread_cap(), 32)));
    ByteWriter payload;

    for (int level = levels; level >= 1; --level) {
        const std::size_t count = lt.level_size(level);
        std::vector<std::int32_t> codes;
        codes.reserve(count);
        std::vector<std::pair<std::uint64_t, T>> outliers;
        const std::size_t s = lt.stride(level);
        const bool coarsest = level == levels;

        std::uint64_t ordinal = 0;
        auto at = [&](std::size_t j) { return state[j]; };
        lt.for_each(level, [&](const LevelPoint &pt) {
            const T pred = coarsest ? T(0) : predict_point<T>(at, pt, s, opt.interp);
            const auto out = quantize_residual(values[pt.flat], pred, opt.eb);
            if (out.outlier) {
                outliers.emplace_back(ordinal, values[pt.flat]);
                state[pt.flat] = values[pt.flat];
            } else {
                state[pt.flat] = out.recon;
            }
            codes.push_back(out.code);
            ++ordinal;
        });

        std::vector<std::uint32_t> negabinary(count);
        for (std::size_t i = 0; i < count; ++i) negabinary[i] = to_negabinary(codes[i]);

        LevelRecord &rec = archive.records[static_cast<std::size_t>(level - 1)];
        rec.count = count;
        rec.delta = detail::measure_loss_table(lt, level, opt.interp, opt.eb, codes, negabinary, scratch);

        BitplaneSet planes = split(negabinary);
        xor_encode(planes);
        std::array<EncodedBlock, 32> blocks;
        parallel_for(32, [&](std::size_t p, int) {
            blocks[p] = backend_encode(planes.planes[p], kDefaultBackend, count);
        });

        rec.outlier_offset = payload.bytes.size();
        rec.outlier_count = outliers.size();
        detail::append_outlier_block<T>(payload, outliers);
        rec.outlier_length = payload.bytes.size() - rec.outlier_offset;
        for (int p = 0; p < 32; ++p) {
            rec.planes[static_cast<std::size_t>(p)].offset = payload.bytes.size();
            write_block(payload, blocks[static_cast<std::size_t>(p)]);
            rec.planes[static_cast<std::size_t>(p)].length = payload.bytes.size() - rec.planes[static_cast<std::size_t>(p)].offset;
        }
    }

    archive.payload = std::move(payload.bytes);
    archive.header.payload_bytes = archive.payload.size();
    return archive;
}

namespace detail {

template <class T>
void decode_and_apply(ArchiveReader &archive, const LevelTraversal &lt, int level, int planes_loaded,
                      std::vector<T> &state, std::vector<std::uint32_t> &merged_out) {
    const ArchiveHeader &h = archive.header();
    const std::uint64_t count = archive.record(level).count;
    if (count != lt.level_size(level)) throw std::runtime_error("level point count does not match its dimensions");

    std::vector<EncodedBlock> loaded(static_cast<std::size_t>(planes_loaded));
    for (int p = 0; p < planes_loaded; ++p) {
        loaded[static_cast<std::size_t>(p)] = archive.load_plane(level, p);
        if (loaded[static_cast<std::size_t>(p)].raw_bits != count) {
            throw std::runtime_error("plane bit count does not match level");
        }
    }

    BitplaneSet set;
    set.count = count;
    parallel_for(static_cast<std::size_t>(planes_loaded), [&](std::size_t p, int) {
        set.planes[p] = backend_decode(loaded[p]);
    });
    xor_decode(set, planes_loaded);
    merged_out = merge(set, planes_loaded);

    std::vector<std::int32_t> codes(count);
    for (std::uint64_t i = 0; i < count; ++i) codes[i] = from_negabinary(merged_out[i]);
    const auto outliers = archive.load_outliers<T>(level);
    apply_level(state, lt, level, h.interp, h.eb, codes, outliers);
}

}  // namespace detail

// Single-pass reconstruction: levels are visited coarsest to finest exactly
// once, decoding only the planes the plan names.
template <class T>
Retrieved<T> reconstruct_field(ArchiveReader &archive, const RetrievalPlan &plan) {
    const ArchiveHeader &h = archive.header();
    if (h.scalar != scalar_kind_of<T>()) throw std::invalid_argument("scalar kind does not match archive");
    validate_plan(h, plan);

    LevelTraversal lt(h.dims, max_levels_for_cap(h.anchor_cap));
    if (lt.levels() != h.levels) throw std::runtime_error("archive level count does not match its dimensions");

    Retrieved<T> out;
    out.values.assign(lt.size(), T(0));
    out.session.archive_crc = archive.identity();
    out.session.level.resize(static_cast<std::size_t>(h.levels));
    out.stats.level_visits.assign(static_cast<std::size_t>(h.levels), 0);
    const std::uint64_t read_before = archive.payload_bytes_read();

    for (int level = h.levels; level >= 1; --level) {
        const int k = plan.k[static_cast<std::size_t>(level - 1)];
        std::vector<std::uint32_t> merged;
        detail::decode_and_apply(archive, lt, level, k, out.values, merged);
        out.stats.level_visits[static_cast<std::size_t>(level - 1)] += 1;
        auto &ls = out.session.level[static_cast<std::size_t>(level - 1)];
        ls.planes_loaded = k;
        if (level <= h.progressive_levels) ls.merged = std::move(merged);
    }
    out.stats.payload_bytes_loaded = archive.payload_bytes_read() - read_before;
    return out;
}

// Refinement: decode only the newly requested planes, fold their digits into
// the session's merged codewords, and replay the progressive levels on top of
// the previous reconstruction. Codeword merging is exact integer work and the
// replay repeats the reconstruction arithmetic verbatim, so the output is
// bit-identical to a from-scratch retrieval of the target plan.
template <class T>
Retrieved<T> refine_field(ArchiveReader &archive, const RetrievalSession &session, std::span<const T> previous,
                          const RetrievalPlan &target) {
    const ArchiveHeader &h = archive.header();
    if (h.scalar != scalar_kind_of<T>()) throw std::invalid_argument("scalar kind does not match archive");
    validate_plan(h, target);
    if (session.archive_crc != archive.identity()) throw std::runtime_error("session does not belong to this archive");
    if (session.level.size() != h.levels) throw std::runtime_error("session level count does not match archive");

    LevelTraversal lt(h.dims, max_levels_for_cap(h.anchor_cap));
    if (previous.size() != lt.size()) throw std::invalid_argument("previous reconstruction has wrong size");
    for (int level = 1; level <= h.levels; ++level) {
        if (target.k[static_cast<std::size_t>(level - 1)] < session.level[static_cast<std::size_t>(level - 1)].planes_loaded) {
            throw std::invalid_argument("refinement plan must not drop planes the session already loaded");
        }
    }

    Retrieved<T> out;
    out.values.assign(previous.begin(), previous.end());
    out.session.archive_crc = session.archive_crc;
    out.session.level = session.level;
    out.stats.level_visits.assign(static_cast<std::size_t>(h.levels), 0);
    const std::uint64_t read_before = archive.payload_bytes_read();

    for (int level = h.levels; level >= 1; --level) {
        if (level > h.progressive_levels) continue;  // fully loaded, values already final
        const auto li = static_cast<std::size_t>(level - 1);
        const int k_old = session.level[li].planes_loaded;
        const int k_new = target.k[li];
        const std::uint64_t count = archive.record(level).count;

        std::vector<std::uint32_t> merged = session.level[li].merged;
        if (merged.size() != count) throw std::runtime_error("session codeword array has wrong length");

        for (int p = k_old; p < k_new; ++p) {
            const EncodedBlock block = archive.load_plane(level, p);
            if (block.raw_bits != count) throw std::runtime_error("plane bit count does not match level");
            auto raw = backend_decode(block);
            const auto prev1 = p >= 1 ? extract_digit_plane(merged, p - 1) : std::vector<std::uint8_t>(raw.size(), 0);
            const auto prev2 = p >= 2 ? extract_digit_plane(merged, p - 2) : std::vector<std::uint8_t>(raw.size(), 0);
            for (std::size_t b = 0; b < raw.size(); ++b) raw[b] ^= static_cast<std::uint8_t>(prev1[b] ^ prev2[b]);
            const std::uint32_t digit = 1u << (31 - p);
            for (std::uint64_t i = 0; i < count; ++i) {
                if ((raw[i >> 3] >> (i & 7)) & 1u) merged[i] |= digit;
            }
        }

        std::vector<std::int32_t> codes(count);
        for (std::uint64_t i = 0; i < count; ++i) codes[i] = from_negabinary(merged[i]);
        const auto outliers = archive.load_outliers<T>(level);
        detail::apply_level(out.values, lt, level, h.interp, h.eb, codes, outliers);
        out.stats.level_visits[li] += 1;

        out.session.level[li].planes_loaded = k_new;
        out.session.level[li].merged = std::move(merged);
    }
    out.stats.payload_bytes_loaded = archive.payload_bytes_read() - read_before;
    return out;
}

template <class T>
FieldMetrics compute_metrics(std::span<const T> original, std::span<const T> decoded) {
    if (original.size() != decoded.size()) throw std::invalid_argument("metrics inputs differ in size");
    FieldMetrics m;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sq = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        const double a = static_cast<double>(original[i]);
        const double b = static_cast<double>(decoded[i]);
        const double diff = a - b;
        m.max_error = std::max(m.max_error, std::fabs(diff));
        sq += diff * diff;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    m.mse = original.empty() ? 0.0 : sq / static_cast<double>(original.size());
    m.psnr = m.mse == 0.0 ? std::numeric_limits<double>::infinity()
                          : 20.0 * std::log10((hi - lo) / std::sqrt(m.mse));
    return m;
}

}  // namespace ipcomp

#endif
