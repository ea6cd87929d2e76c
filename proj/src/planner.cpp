#include "ipcomp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ipcomp/predictor.hpp"

namespace ipcomp {

namespace {

constexpr int kBuckets = 1024;
constexpr int kInfCost = kBuckets + 1;

double level_weight(const ErrorModel &model, int level) {
    return std::pow(model.amplification, level - 1);
}

// bytes of plane blocks 0..31-d, i.e. the optional part of a level's load
std::uint64_t optional_bytes(const LevelCosts &lc, int dropped) {
    std::uint64_t sum = 0;
    for (int p = 0; p < 32 - dropped; ++p) sum += lc.plane_bytes[static_cast<std::size_t>(p)];
    return sum;
}

}  // namespace

ErrorModel build_error_model(const ArchiveHeader &header, std::span<const LevelRecord> records) {
    ErrorModel model;
    model.levels = header.levels;
    model.progressive_levels = header.progressive_levels;
    model.eb = header.eb;
    model.amplification = amplification(header.interp);
    model.level.resize(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        LevelCosts &lc = model.level[i];
        lc.delta = records[i].delta;
        for (int p = 0; p < 32; ++p) lc.plane_bytes[static_cast<std::size_t>(p)] = records[i].planes[static_cast<std::size_t>(p)].length;
        lc.outlier_bytes = records[i].outlier_length;
        lc.progressive = static_cast<int>(i) + 1 <= model.progressive_levels;
    }
    return model;
}

RetrievalPlan full_plan(const ErrorModel &model) {
    return RetrievalPlan{std::vector<int>(static_cast<std::size_t>(model.levels), 32)};
}

double bound_for_plan(const ErrorModel &model, const RetrievalPlan &plan) {
    double sum = 0.0;
    for (int l = 1; l <= model.levels; ++l) {
        const int d = 32 - plan.k[static_cast<std::size_t>(l - 1)];
        sum += level_weight(model, l) * model.at(l).delta[static_cast<std::size_t>(d)];
    }
    return sum + model.eb;
}

std::uint64_t mandatory_payload_bytes(const ErrorModel &model) {
    std::uint64_t sum = 0;
    for (int l = 1; l <= model.levels; ++l) {
        sum += model.at(l).outlier_bytes;
        if (!model.at(l).progressive) sum += optional_bytes(model.at(l), 0);
    }
    return sum;
}

std::uint64_t total_payload_bytes(const ErrorModel &model) {
    std::uint64_t sum = 0;
    for (int l = 1; l <= model.levels; ++l) sum += model.at(l).outlier_bytes + optional_bytes(model.at(l), 0);
    return sum;
}

std::uint64_t plan_payload_bytes(const ErrorModel &model, const RetrievalPlan &plan) {
    std::uint64_t sum = mandatory_payload_bytes(model);
    for (int l = 1; l <= model.progressive_levels; ++l) {
        sum += optional_bytes(model.at(l), 32 - plan.k[static_cast<std::size_t>(l - 1)]);
    }
    return sum;
}

namespace {

struct Choice {
    int dropped;
    int cost;             // discretized constraint units
    std::uint64_t bytes;  // optional bytes loaded under this choice
    double err;           // amplified loss contribution
};

// per progressive level, choices worth considering: for each distinct cost the
// largest saving; dominated drops are removed
std::vector<Choice> error_mode_choices(const ErrorModel &model, int level, double slack) {
    const LevelCosts &lc = model.at(level);
    const double w = level_weight(model, level);
    std::vector<Choice> out;
    for (int d = 0; d <= 32; ++d) {
        const double err = w * lc.delta[static_cast<std::size_t>(d)];
        int cost;
        if (err <= 0.0) {
            cost = 0;
        } else if (std::isinf(slack)) {
            cost = 0;
        } else if (slack <= 0.0) {
            cost = kInfCost;
        } else {
            const double units = std::ceil(err * static_cast<double>(kBuckets) / slack);
            cost = units > static_cast<double>(kInfCost) ? kInfCost : static_cast<int>(units);
        }
        if (cost > kBuckets) continue;
        const std::uint64_t bytes = optional_bytes(lc, d);
        // larger d with the same cost always loads no more bytes
        if (!out.empty() && out.back().cost == cost) {
            out.back() = Choice{d, cost, bytes, err};
        } else {
            out.push_back(Choice{d, cost, bytes, err});
        }
    }
    return out;
}

}  // namespace

RetrievalPlan plan_for_error(const ErrorModel &model, double max_error) {
    if (std::isnan(max_error) || max_error < model.eb) {
        throw InfeasibleRequest("requested error bound is below the archive's compression bound");
    }
    const double slack = max_error - model.eb;

    RetrievalPlan plan = full_plan(model);
    const int lp = model.progressive_levels;
    if (lp == 0) return plan;

    // DP over progressive levels, finest first; table rows are budget prefixes
    std::vector<std::vector<Choice>> choices;
    choices.reserve(static_cast<std::size_t>(lp));
    for (int l = 1; l <= lp; ++l) choices.push_back(error_mode_choices(model, l, slack));

    const std::uint64_t kNoSaving = 0;
    std::vector<std::vector<std::uint64_t>> best(static_cast<std::size_t>(lp) + 1,
                                                 std::vector<std::uint64_t>(kBuckets + 1, kNoSaving));
    for (int i = 1; i <= lp; ++i) {
        const auto &cs = choices[static_cast<std::size_t>(i - 1)];
        const std::uint64_t base = optional_bytes(model.at(i), 0);
        for (int e = 0; e <= kBuckets; ++e) {
            std::uint64_t v = 0;
            bool any = false;
            for (const auto &c : cs) {
                if (c.cost > e) continue;
                const std::uint64_t cand = best[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(e - c.cost)] +
                                           (base - c.bytes);
                if (!any || cand > v) {
                    v = cand;
                    any = true;
                }
            }
            // d = 0 always has cost 0, so every budget is reachable
            best[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)] = v;
        }
    }

    // walk back coarsest-first, preferring the largest drop consistent with the
    // optimum (coarse planes are the cheapest to re-add later)
    int e = kBuckets;
    for (int i = lp; i >= 1; --i) {
        const auto &cs = choices[static_cast<std::size_t>(i - 1)];
        const std::uint64_t base = optional_bytes(model.at(i), 0);
        const std::uint64_t want = best[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)];
        int chosen = -1;
        for (auto it = cs.rbegin(); it != cs.rend(); ++it) {
            if (it->cost > e) continue;
            if (best[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(e - it->cost)] + (base - it->bytes) == want) {
                chosen = static_cast<int>(it - cs.rbegin());
                plan.k[static_cast<std::size_t>(i - 1)] = 32 - it->dropped;
                e -= it->cost;
                break;
            }
        }
        if (chosen < 0) throw std::logic_error("plan reconstruction lost the optimum");
    }

    // discretization rounds costs up, so this only trips on fp ulps; retreat to
    // smaller drops until the reported bound honours the request
    while (bound_for_plan(model, plan) > max_error) {
        int worst = -1;
        double worst_err = 0.0;
        for (int l = 1; l <= lp; ++l) {
            const int d = 32 - plan.k[static_cast<std::size_t>(l - 1)];
            const double err = level_weight(model, l) * model.at(l).delta[static_cast<std::size_t>(d)];
            if (d > 0 && err > worst_err) {
                worst_err = err;
                worst = l;
            }
        }
        if (worst < 0) break;  // bound == eb already
        plan.k[static_cast<std::size_t>(worst - 1)] += 1;
    }
    return plan;
}

RetrievalPlan plan_for_size(const ErrorModel &model, std::uint64_t byte_budget) {
    const std::uint64_t mandatory = mandatory_payload_bytes(model);
    if (byte_budget < mandatory) {
        throw InfeasibleRequest("byte budget is below the mandatory payload (outliers and non-progressive levels)");
    }
    const std::uint64_t budget = byte_budget - mandatory;

    RetrievalPlan plan = full_plan(model);
    const int lp = model.progressive_levels;
    if (lp == 0) return plan;

    struct Value {
        double err;
        std::uint64_t bytes;
        bool operator<(const Value &o) const { return err < o.err || (err == o.err && bytes < o.bytes); }
        bool operator==(const Value &o) const { return err == o.err && bytes == o.bytes; }
    };

    // integer cost units guarantee the budget is never exceeded
    auto cost_of = [&](std::uint64_t bytes) -> int {
        if (bytes == 0) return 0;
        if (budget == 0) return kInfCost;
        const std::uint64_t units = (bytes * kBuckets + budget - 1) / budget;
        return units > static_cast<std::uint64_t>(kBuckets) ? kInfCost : static_cast<int>(units);
    };

    std::vector<std::vector<Choice>> choices(static_cast<std::size_t>(lp));
    for (int l = 1; l <= lp; ++l) {
        const LevelCosts &lc = model.at(l);
        const double w = level_weight(model, l);
        auto &cs = choices[static_cast<std::size_t>(l - 1)];
        for (int d = 32; d >= 0; --d) {  // ascending bytes
            const std::uint64_t bytes = optional_bytes(lc, d);
            const int cost = cost_of(bytes);
            if (cost > kBuckets) continue;
            const double err = w * lc.delta[static_cast<std::size_t>(d)];
            if (!cs.empty() && cs.back().cost == cost) {
                if (err < cs.back().err) cs.back() = Choice{d, cost, bytes, err};
            } else {
                cs.push_back(Choice{d, cost, bytes, err});
            }
        }
        if (cs.empty()) throw InfeasibleRequest("no loadable configuration fits the byte budget");
    }

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<Value>> best(static_cast<std::size_t>(lp) + 1,
                                         std::vector<Value>(kBuckets + 1, Value{kInf, 0}));
    for (int e = 0; e <= kBuckets; ++e) best[0][static_cast<std::size_t>(e)] = Value{0.0, 0};
    for (int i = 1; i <= lp; ++i) {
        const auto &cs = choices[static_cast<std::size_t>(i - 1)];
        for (int e = 0; e <= kBuckets; ++e) {
            Value v{kInf, 0};
            for (const auto &c : cs) {
                if (c.cost > e) continue;
                const Value &prev = best[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(e - c.cost)];
                if (std::isinf(prev.err)) continue;
                const Value cand{prev.err + c.err, prev.bytes + c.bytes};
                if (cand < v) v = cand;
            }
            best[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)] = v;
        }
    }

    if (std::isinf(best[static_cast<std::size_t>(lp)][kBuckets].err)) {
        throw InfeasibleRequest("no loadable configuration fits the byte budget");
    }

    int e = kBuckets;
    for (int i = lp; i >= 1; --i) {
        const auto &cs = choices[static_cast<std::size_t>(i - 1)];
        const Value want = best[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)];
        bool found = false;
        // prefer the largest drop among optimal choices
        for (const auto &c : cs) {
            if (c.cost > e) continue;
            const Value &prev = best[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(e - c.cost)];
            if (std::isinf(prev.err)) continue;
            if (Value{prev.err + c.err, prev.bytes + c.bytes} == want) {
                plan.k[static_cast<std::size_t>(i - 1)] = 32 - c.dropped;
                e -= c.cost;
                found = true;
                break;
            }
        }
        if (!found) throw std::logic_error("plan reconstruction lost the optimum");
    }
    return plan;
}

}  // namespace ipcomp
