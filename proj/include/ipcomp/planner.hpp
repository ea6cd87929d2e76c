#ifndef IPCOMP_PLANNER_HPP
#define IPCOMP_PLANNER_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ipcomp/archive.hpp"
#include "ipcomp/common.hpp"

namespace ipcomp {

// per-level inputs of the retrieval optimizer, taken from the block index
struct LevelCosts {
    std::array<double, 33> delta{};              // measured loss for d dropped planes
    std::array<std::uint64_t, 32> plane_bytes{};  // serialized block size per plane
    std::uint64_t outlier_bytes = 0;
    bool progressive = false;
};

struct ErrorModel {
    int levels = 0;
    int progressive_levels = 0;
    double eb = 0.0;
    double amplification = 1.0;
    std::vector<LevelCosts> level;  // [l-1]

    const LevelCosts &at(int l) const { return level[static_cast<std::size_t>(l - 1)]; }
};

ErrorModel build_error_model(const ArchiveHeader &header, std::span<const LevelRecord> records);

RetrievalPlan full_plan(const ErrorModel &model);

// error reachable by a plan: sum over levels of p^(l-1) * delta_l[32-k_l], plus
// the quantization bound
double bound_for_plan(const ErrorModel &model, const RetrievalPlan &plan);

// payload bytes a plan loads: selected plane blocks plus every outlier block
// and all planes of non-progressive levels
std::uint64_t plan_payload_bytes(const ErrorModel &model, const RetrievalPlan &plan);
std::uint64_t mandatory_payload_bytes(const ErrorModel &model);
std::uint64_t total_payload_bytes(const ErrorModel &model);

// fewest loaded bytes with bound_for_plan(plan) <= max_error; throws
// InfeasibleRequest when max_error < eb
RetrievalPlan plan_for_error(const ErrorModel &model, double max_error);

// smallest estimated error with plan_payload_bytes(plan) <= byte_budget, ties
// broken toward fewer bytes; throws InfeasibleRequest below the mandatory size
RetrievalPlan plan_for_size(const ErrorModel &model, std::uint64_t byte_budget);

}  // namespace ipcomp

#endif
