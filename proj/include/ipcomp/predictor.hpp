#ifndef IPCOMP_PREDICTOR_HPP
#define IPCOMP_PREDICTOR_HPP

#include <span>
#include <vector>

#include "ipcomp/grid.hpp"

namespace ipcomp {

// infinity norm of the interpolation operator: 1/2 + 1/2, resp. 2*(1/16 + 9/16)
inline double amplification(InterpKind k) { return k == InterpKind::cubic ? 1.25 : 1.0; }

template <class T>
inline T predict_linear(T a, T b) {
    return static_cast<T>((a + b) / T(2));
}

template <class T>
inline T predict_cubic(T a, T b, T c, T d) {
    return static_cast<T>((T(9) * (b + c) - (a + d)) / T(16));
}

// Interpolate one target along its pass axis from already-reconstructed
// neighbours. Falls back cubic -> linear -> copy as the grid edge truncates the
// stencil; the left distance-s neighbour always exists for pass targets.
template <class T, class At>
inline T predict_point(At &&at, const LevelPoint &pt, std::size_t s, InterpKind kind) {
    if (pt.axis < 0) return T(0);
    const std::size_t st = pt.axis_step;
    if (kind == InterpKind::cubic && pt.coord >= 3 * s && pt.coord + 3 * s < pt.extent) {
        return predict_cubic(at(pt.flat - 3 * st), at(pt.flat - st), at(pt.flat + st), at(pt.flat + 3 * st));
    }
    if (pt.coord + s < pt.extent) {
        return predict_linear(at(pt.flat - st), at(pt.flat + st));
    }
    return at(pt.flat - st);
}

// Predictions for every point of one level, in traversal order. The coarsest
// level is predicted from the zero vector. Callers must have materialized all
// coarser levels, and for multi-pass levels the earlier passes of this level,
// in `state`.
template <class T>
std::vector<T> predict_level(std::span<const T> state, const LevelTraversal &lt, int level, InterpKind kind) {
    std::vector<T> out;
    out.reserve(lt.level_size(level));
    if (level == lt.levels()) {
        out.assign(lt.level_size(level), T(0));
        return out;
    }
    const std::size_t s = lt.stride(level);
    lt.for_each(level, [&](const LevelPoint &pt) {
        out.push_back(predict_point<T>([&](std::size_t i) { return state[i]; }, pt, s, kind));
    });
    return out;
}

}  // namespace ipcomp

#endif
