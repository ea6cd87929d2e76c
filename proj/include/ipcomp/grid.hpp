#ifndef IPCOMP_GRID_HPP
#define IPCOMP_GRID_HPP

#include <array>
#include <cstdint>
#include <stdexcept>

#include "ipcomp/common.hpp"

namespace ipcomp {

inline constexpr std::size_t kDefaultAnchorStrideCap = 64;

inline int max_levels_for_cap(std::size_t anchor_stride_cap) {
    int l = 1;
    while ((std::size_t{1} << l) <= anchor_stride_cap) ++l;
    return l;  // stride 2^(l-1) <= cap
}

// smallest L with 2^L >= longest extent, clamped to [1, max_levels]
inline int level_count(const Dims &dims, int max_levels = 7) {
    validate_dims(dims);
    std::size_t m = 1;
    for (auto d : dims) m = std::max(m, d);
    int l = 1;
    while ((std::size_t{1} << l) < m && l < max_levels) ++l;
    return l;
}

// one grid point visited by a level pass; axis == -1 for the coarsest level,
// whose points have no interpolation sources
struct LevelPoint {
    std::size_t flat;       // row-major element index
    int axis;               // interpolation axis of the pass
    std::size_t coord;      // coordinate along that axis
    std::size_t extent;     // grid extent along that axis
    std::size_t axis_step;  // flat-index distance of one stride step along the axis
};

// Partition of the grid into levels by stride. The coarsest level L holds every
// point whose coordinates are all multiples of 2^(L-1). A finer level l < L
// holds the stride-2^(l-1) lattice minus the stride-2^l lattice, visited in one
// pass per axis: pass j targets points whose coordinate j is an odd multiple of
// the stride, with earlier axes unrestricted on the lattice and later axes on
// the doubled lattice. Passes run in ascending axis order, points in row-major
// order, so every interpolation source is visited before its targets.
class LevelTraversal {
   public:
    explicit LevelTraversal(Dims dims, int max_levels = 7)
        : dims_(std::move(dims)), strides_(row_strides(dims_)), levels_(level_count(dims_, max_levels)) {}

    const Dims &dims() const { return dims_; }
    int levels() const { return levels_; }
    std::size_t size() const { return element_count(dims_); }
    std::size_t stride(int level) const { return std::size_t{1} << (level - 1); }
    std::size_t anchor_stride() const { return stride(levels_); }

    std::size_t level_size(int level) const {
        check_level(level);
        const std::size_t s = stride(level);
        const int nd = static_cast<int>(dims_.size());
        if (level == levels_) {
            std::size_t n = 1;
            for (auto d : dims_) n *= lattice_count(d, 0, s);
            return n;
        }
        std::size_t total = 0;
        for (int axis = 0; axis < nd; ++axis) {
            if (dims_[axis] <= s) continue;
            std::size_t n = 1;
            for (int i = 0; i < nd; ++i) {
                if (i < axis) n *= lattice_count(dims_[i], 0, s);
                else if (i == axis) n *= lattice_count(dims_[i], s, 2 * s);
                else n *= lattice_count(dims_[i], 0, 2 * s);
            }
            total += n;
        }
        return total;
    }

    template <class F>
    void for_each(int level, F &&fn) const {
        check_level(level);
        const std::size_t s = stride(level);
        const int nd = static_cast<int>(dims_.size());
        if (level == levels_) {
            std::array<std::size_t, 4> start{}, step{};
            for (int i = 0; i < nd; ++i) {
                start[i] = 0;
                step[i] = s;
            }
            walk_box(start, step, nd, -1, s, fn);
            return;
        }
        for (int axis = 0; axis < nd; ++axis) {
            if (dims_[axis] <= s) continue;  // no odd multiple of s fits
            std::array<std::size_t, 4> start{}, step{};
            for (int i = 0; i < nd; ++i) {
                if (i < axis) {
                    start[i] = 0;
                    step[i] = s;
                } else if (i == axis) {
                    start[i] = s;
                    step[i] = 2 * s;
                } else {
                    start[i] = 0;
                    step[i] = 2 * s;
                }
            }
            walk_box(start, step, nd, axis, s, fn);
        }
    }

   private:
    static std::size_t lattice_count(std::size_t extent, std::size_t start, std::size_t step) {
        if (start >= extent) return 0;
        return (extent - 1 - start) / step + 1;
    }

    void check_level(int level) const {
        if (level < 1 || level > levels_) throw std::invalid_argument("level index out of range");
    }

    template <class F>
    void walk_box(const std::array<std::size_t, 4> &start, const std::array<std::size_t, 4> &step, int nd, int axis,
                  std::size_t s, F &&fn) const {
        std::array<std::size_t, 4> count{};
        for (int i = 0; i < nd; ++i) {
            count[i] = lattice_count(dims_[i], start[i], step[i]);
            if (count[i] == 0) return;
        }
        std::array<std::size_t, 4> step_flat{};
        std::size_t base = 0;
        for (int i = 0; i < nd; ++i) {
            step_flat[i] = step[i] * strides_[i];
            base += start[i] * strides_[i];
        }
        const std::size_t axis_step = axis >= 0 ? s * strides_[axis] : 0;
        const std::size_t axis_extent = axis >= 0 ? dims_[axis] : 0;

        std::array<std::size_t, 4> idx{};
        std::size_t flat = base;
        for (;;) {
            const std::size_t coord = axis >= 0 ? start[axis] + idx[axis] * step[axis] : 0;
            fn(LevelPoint{flat, axis, coord, axis_extent, axis_step});
            int d = nd - 1;
            for (; d >= 0; --d) {
                ++idx[d];
                flat += step_flat[d];
                if (idx[d] < count[d]) break;
                flat -= idx[d] * step_flat[d];
                idx[d] = 0;
            }
            if (d < 0) return;
        }
    }

    Dims dims_;
    std::vector<std::size_t> strides_;
    int levels_;
};

}  // namespace ipcomp

#endif
