#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "field_util.hpp"
#include "ipcomp/pipeline.hpp"

using namespace ipcomp;

namespace {

template <class T>
std::string compress_to_bytes(const std::vector<T> &values, const Dims &dims, const CompressOptions &opt) {
    const ArchiveData archive = compress_field<T>(values, dims, opt);
    std::ostringstream out(std::ios::binary);
    write_archive(out, archive);
    return out.str();
}

template <class T>
double max_abs_error(const std::vector<T> &a, const std::vector<T> &b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    }
    return worst;
}

RetrievalPlan random_plan(std::mt19937_64 &rng, const ArchiveHeader &h) {
    RetrievalPlan plan;
    plan.k.resize(h.levels);
    for (int l = 1; l <= h.levels; ++l) {
        plan.k[static_cast<std::size_t>(l - 1)] = l > h.progressive_levels ? 32 : static_cast<int>(rng() % 33);
    }
    return plan;
}

RetrievalPlan widen(std::mt19937_64 &rng, const ArchiveHeader &h, const RetrievalPlan &base) {
    RetrievalPlan plan = base;
    for (int l = 1; l <= h.progressive_levels; ++l) {
        auto &k = plan.k[static_cast<std::size_t>(l - 1)];
        k += static_cast<int>(rng() % static_cast<std::uint64_t>(33 - k));
    }
    return plan;
}

}  // namespace

TEST_CASE("constant fields compress to almost nothing and retrieve exactly") {
    const Dims dims = {17, 9};
    const std::vector<double> values(element_count(dims), 4.75);
    const std::string bytes = compress_to_bytes(values, dims, {.eb = 1e-3});
    CHECK(bytes.size() < 16384);  // index dominates; payload is empty planes

    std::istringstream in(bytes, std::ios::binary);
    ArchiveReader reader(in);
    const auto model = build_error_model(reader.header(), reader.records());
    const auto out = reconstruct_field<double>(reader, full_plan(model));
    CHECK(max_abs_error(values, out.values) <= 1e-3);
}

TEST_CASE("linear ramps predict exactly: every non-anchor code is zero") {
    const Dims dims = {65};
    std::vector<double> values(65);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(i);
    for (InterpKind kind : {InterpKind::linear, InterpKind::cubic}) {
        const std::string bytes = compress_to_bytes(values, dims, {.eb = 0.5, .interp = kind});
        std::istringstream in(bytes, std::ios::binary);
        ArchiveReader reader(in);
        for (int level = 1; level < reader.header().levels; ++level) {
            CHECK(reader.record(level).delta[32] == 0.0);  // all codes at this level are zero
            CHECK(reader.record(level).outlier_count == 0);
        }
        CHECK(reader.record(reader.header().levels).delta[32] > 0.0);  // anchors carry the values
    }
}

TEST_CASE("full retrieval respects the error bound on smooth fields") {
    int case_id = 0;
    for (const Dims &dims : {Dims{257}, Dims{33, 21}, Dims{17, 18, 19}}) {
        for (InterpKind kind : {InterpKind::linear, InterpKind::cubic}) {
            const auto field = testutil::smooth_field(dims, 1000 + static_cast<std::uint64_t>(case_id++));
            const double eb = 1e-4 * testutil::field_range(field);
            const std::string bytes = compress_to_bytes(field, dims, {.eb = eb, .interp = kind});
            std::istringstream in(bytes, std::ios::binary);
            ArchiveReader reader(in);
            const auto model = build_error_model(reader.header(), reader.records());
            const auto out = reconstruct_field<double>(reader, full_plan(model));
            CHECK(max_abs_error(field, out.values) <= eb);
            CHECK(out.stats.payload_bytes_loaded == plan_payload_bytes(model, full_plan(model)));
        }
    }
}

TEST_CASE("f32 fields round trip within the bound") {
    const Dims dims = {31, 22};
    const auto field64 = testutil::smooth_field(dims, 77);
    const auto field = testutil::to_f32(field64);
    const double eb = 1e-3 * testutil::field_range(field64);
    const std::string bytes = compress_to_bytes(field, dims, {.eb = eb});
    std::istringstream in(bytes, std::ios::binary);
    ArchiveReader reader(in);
    CHECK(reader.header().scalar == ScalarKind::f32);
    const auto model = build_error_model(reader.header(), reader.records());
    const auto out = reconstruct_field<float>(reader, full_plan(model));
    std::vector<float> decoded = out.values;
    double worst = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        worst = std::max(worst, std::fabs(static_cast<double>(field[i]) - static_cast<double>(decoded[i])));
    }
    CHECK(worst <= eb);
    CHECK_THROWS_AS(reconstruct_field<double>(reader, full_plan(model)), std::invalid_argument);
}

TEST_CASE("non-finite and spiked values escape to outliers and retrieve exactly") {
    const Dims dims = {40};
    std::vector<double> values(40, 1.0);
    values[7] = std::numeric_limits<double>::infinity();
    values[21] = 1e60;
    values[22] = -1e60;
    const std::string bytes = compress_to_bytes(values, dims, {.eb = 1e-6});
    std::istringstream in(bytes, std::ios::binary);
    ArchiveReader reader(in);
    const auto model = build_error_model(reader.header(), reader.records());
    const auto out = reconstruct_field<double>(reader, full_plan(model));
    CHECK(out.values[7] == values[7]);
    CHECK(out.values[21] == values[21]);
    CHECK(out.values[22] == values[22]);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isfinite(values[i])) CHECK(std::fabs(out.values[i] - values[i]) <= 1e-6);
    }
}

TEST_CASE("compression is deterministic") {
    const Dims dims = {19, 23};
    const auto field = testutil::smooth_field(dims, 5);
    const double eb = 1e-5 * testutil::field_range(field);
    const std::string a = compress_to_bytes(field, dims, {.eb = eb});
    const std::string b = compress_to_bytes(field, dims, {.eb = eb});
    CHECK(a == b);
}

TEST_CASE("reconstruction visits every level exactly once") {
    const Dims dims = {33, 17};
    const auto field = testutil::smooth_field(dims, 9);
    const std::string bytes = compress_to_bytes(field, dims, {.eb = 1e-3});
    std::istringstream in(bytes, std::ios::binary);
    ArchiveReader reader(in);
    const auto model = build_error_model(reader.header(), reader.records());
    const auto out = reconstruct_field<double>(reader, plan_for_error(model, 0.5));
    for (int visits : out.stats.level_visits) CHECK(visits == 1);
}

TEST_CASE("empty progressive plans yield the prediction skeleton within bound") {
    const Dims dims = {33, 33};
    const auto field = testutil::smooth_field(dims, 11);
    const double eb = 1e-4 * testutil::field_range(field);
    const std::string bytes = compress_to_bytes(field, dims, {.eb = eb, .interp = InterpKind::linear});
    std::istringstream in(bytes, std::ios::binary);
    ArchiveReader reader(in);
    const auto model = build_error_model(reader.header(), reader.records());

    RetrievalPlan none;
    none.k.assign(reader.header().levels, 0);
    const auto out = reconstruct_field<double>(reader, none);
    CHECK(max_abs_error(field, out.values) <= bound_for_plan(model, none));
    CHECK(out.stats.payload_bytes_loaded == mandatory_payload_bytes(model));
}

TEST_CASE("planned retrievals stay within the requested bound") {
    int seed = 42;
    for (const Dims &dims : {Dims{129}, Dims{33, 29}, Dims{17, 15, 13}}) {
        const auto field = testutil::smooth_field(dims, static_cast<std::uint64_t>(seed++));
        const double eb = 1e-4 * testutil::field_range(field);
        const std::string bytes = compress_to_bytes(field, dims, {.eb = eb, .interp = InterpKind::linear});
        std::istringstream in(bytes, std::ios::binary);
        ArchiveReader reader(in);
        const auto model = build_error_model(reader.header(), reader.records());
        for (double factor : {4.0, 64.0, 1024.0, 65536.0}) {
            const double target = factor * eb;
            const auto plan = plan_for_error(model, target);
            CHECK(bound_for_plan(model, plan) <= target);
            const auto out = reconstruct_field<double>(reader, plan);
            const double measured = max_abs_error(field, out.values);
            CHECK(measured <= bound_for_plan(model, plan));
            CHECK(measured <= target);
            CHECK(out.stats.payload_bytes_loaded == plan_payload_bytes(model, plan));
        }
    }
}

TEST_CASE("cubic one-dimensional retrievals stay within the requested bound") {
    const Dims dims = {513};
    const auto field = testutil::smooth_field(dims, 4242);
    const double eb = 1e-5 * testutil::field_range(field);
    const std::string bytes = compress_to_bytes(field, dims, {.eb = eb, .interp = InterpKind::cubic});
    std::istringstream in(bytes, std::ios::binary);
    ArchiveReader reader(in);
    const auto model = build_error_model(reader.header(), reader.records());
    for (double factor : {4.0, 64.0, 1024.0}) {
        const auto plan = plan_for_error(model, factor * eb);
        const auto out = reconstruct_field<double>(reader, plan);
        CHECK(max_abs_error(field, out.values) <= factor * eb);
    }
}

TEST_CASE("per-level loss tables dominate replayed truncation loss") {
    const Dims dims = {21, 17};
    const auto field = testutil::smooth_field(dims, 31);
    const double eb = 1e-3 * testutil::field_range(field);
    for (InterpKind kind : {InterpKind::linear, InterpKind::cubic}) {
        const std::string bytes = compress_to_bytes(field, dims, {.eb = eb, .interp = kind});
        std::istringstream in(bytes, std::ios::binary);
        ArchiveReader reader(in);
        const auto model = build_error_model(reader.header(), reader.records());
        const auto full = reconstruct_field<double>(reader, full_plan(model));

        LevelTraversal lt(dims);
        for (int level = 1; level <= reader.header().levels; ++level) {
            const auto &rec = reader.record(level);
            for (int d : {1, 2, 3, 5, 8, 13, 21, 32}) {
                RetrievalPlan plan = full_plan(model);
                plan.k[static_cast<std::size_t>(level - 1)] = 32 - d;
                const auto partial = reconstruct_field<double>(reader, plan);
                double worst = 0.0;
                lt.for_each(level, [&](const LevelPoint &pt) {
                    worst = std::max(worst, std::fabs(partial.values[pt.flat] - full.values[pt.flat]));
                });
                const double stored = rec.delta[static_cast<std::size_t>(d)];
                CHECK(worst <= stored * (1.0 + 1e-9) + 1e-300);
                if (stored > rec.delta[static_cast<std::size_t>(d - 1)]) {
                    // fresh maximum: the measurement is tight at the maximizing point
                    CHECK(worst >= stored * (1.0 - 1e-9) - 1e-300);
                }
            }
        }
    }
}

TEST_CASE("one-dimensional loss tables stay within the pure suffix bound") {
    const Dims dims = {129};
    const auto field = testutil::smooth_field(dims, 8);
    const double eb = 1e-4 * testutil::field_range(field);
    const std::string bytes = compress_to_bytes(field, dims, {.eb = eb, .interp = InterpKind::cubic});
    std::istringstream in(bytes, std::ios::binary);
    ArchiveReader reader(in);
    for (int level = 1; level <= reader.header().levels; ++level) {
        for (int d = 0; d <= 32; ++d) {
            const double analytic = static_cast<double>(suffix_uncertainty(d)) * 2.0 * eb;
            CHECK(reader.record(level).delta[static_cast<std::size_t>(d)] <= analytic * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("refinement with no new planes returns the previous field unchanged") {
    const Dims dims = {33, 12};
    const auto field = testutil::smooth_field(dims, 21);
    const double eb = 1e-4 * testutil::field_range(field);
    const std::string bytes = compress_to_bytes(field, dims, {.eb = eb});
    std::istringstream in(bytes, std::ios::binary);
    ArchiveReader reader(in);

    std::mt19937_64 rng(55);
    const auto plan = random_plan(rng, reader.header());
    const auto first = reconstruct_field<double>(reader, plan);
    const auto again = refine_field<double>(reader, first.session, first.values, plan);
    CHECK(again.values == first.values);
    CHECK(again.stats.payload_bytes_loaded <=
          mandatory_payload_bytes(build_error_model(reader.header(), reader.records())));
}

TEST_CASE("refinement is byte-identical to from-scratch reconstruction") {
    std::mt19937_64 rng(606);
    int checked = 0;
    for (const Dims &dims : {Dims{65, 33}, Dims{17, 13, 11}}) {
        const auto field = testutil::smooth_field(dims, 1234 + static_cast<std::uint64_t>(checked));
        const double eb = 1e-4 * testutil::field_range(field);
        for (InterpKind kind : {InterpKind::linear, InterpKind::cubic}) {
            const std::string bytes = compress_to_bytes(field, dims, {.eb = eb, .interp = kind});
            std::istringstream in(bytes, std::ios::binary);
            ArchiveReader reader(in);
            for (int trial = 0; trial < 8; ++trial) {
                const auto p1 = random_plan(rng, reader.header());
                const auto p2 = widen(rng, reader.header(), p1);
                const auto p3 = widen(rng, reader.header(), p2);

                const auto direct2 = reconstruct_field<double>(reader, p2);
                const auto direct3 = reconstruct_field<double>(reader, p3);
                const auto base = reconstruct_field<double>(reader, p1);
                const auto refined2 = refine_field<double>(reader, base.session, base.values, p2);
                REQUIRE(std::memcmp(refined2.values.data(), direct2.values.data(),
                                    refined2.values.size() * sizeof(double)) == 0);
                const auto refined3 = refine_field<double>(reader, refined2.session, refined2.values, p3);
                REQUIRE(std::memcmp(refined3.values.data(), direct3.values.data(),
                                    refined3.values.size() * sizeof(double)) == 0);
                ++checked;
            }
        }
    }
    CHECK(checked >= 32);
}

TEST_CASE("refinement rejects plans that drop loaded planes") {
    const Dims dims = {33};
    const auto field = testutil::smooth_field(dims, 3);
    const std::string bytes = compress_to_bytes(field, dims, {.eb = 1e-3});
    std::istringstream in(bytes, std::ios::binary);
    ArchiveReader reader(in);
    RetrievalPlan plan;
    plan.k.assign(reader.header().levels, 16);
    const auto out = reconstruct_field<double>(reader, plan);
    RetrievalPlan narrower = plan;
    narrower.k[0] = 8;
    CHECK_THROWS_AS(refine_field<double>(reader, out.session, out.values, narrower), std::invalid_argument);
}

TEST_CASE("sessions round trip through their file form and bind to one archive") {
    const Dims dims = {33, 18};
    const auto field = testutil::smooth_field(dims, 66);
    const double eb = 1e-4 * testutil::field_range(field);
    const std::string bytes = compress_to_bytes(field, dims, {.eb = eb});
    std::istringstream in(bytes, std::ios::binary);
    ArchiveReader reader(in);

    std::mt19937_64 rng(77);
    const auto plan = random_plan(rng, reader.header());
    const auto out = reconstruct_field<double>(reader, plan);

    std::ostringstream sess_out(std::ios::binary);
    write_session(sess_out, out.session);
    const std::string sess_bytes = sess_out.str();
    std::istringstream sess_in(sess_bytes, std::ios::binary);
    const auto session = read_session(sess_in, reader);
    REQUIRE(session.level.size() == out.session.level.size());
    for (std::size_t i = 0; i < session.level.size(); ++i) {
        CHECK(session.level[i].planes_loaded == out.session.level[i].planes_loaded);
        CHECK(session.level[i].merged == out.session.level[i].merged);
    }

    // a session from a different archive must be rejected
    const auto other_field = testutil::smooth_field(dims, 67);
    const std::string other_bytes = compress_to_bytes(other_field, dims, {.eb = eb});
    std::istringstream other_in(other_bytes, std::ios::binary);
    ArchiveReader other_reader(other_in);
    std::istringstream sess_in2(sess_bytes, std::ios::binary);
    CHECK_THROWS_AS(read_session(sess_in2, other_reader), std::runtime_error);
    CHECK_THROWS_AS(refine_field<double>(other_reader, out.session, out.values,
                                         full_plan(build_error_model(other_reader.header(), other_reader.records()))),
                    std::runtime_error);
}

TEST_CASE("metrics match a naive two-pass evaluation") {
    {
        const std::vector<double> a = {1.0, 2.0, 3.0};
        const auto m = compute_metrics<double>(a, a);
        CHECK(m.max_error == 0.0);
        CHECK(m.mse == 0.0);
        CHECK(std::isinf(m.psnr));
    }
    {
        std::vector<double> a = {0.0, 10.0, 5.0, 2.5};
        std::vector<double> b = a;
        b[2] += 0.125;
        const auto m = compute_metrics<double>(a, b);
        CHECK(m.max_error == 0.125);
        CHECK(m.mse == doctest::Approx(0.125 * 0.125 / 4.0));
        CHECK(m.psnr == doctest::Approx(20.0 * std::log10(10.0 / std::sqrt(0.125 * 0.125 / 4.0))));
    }
    {
        std::mt19937_64 rng(19);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        std::vector<double> a(1000), b(1000);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = u(rng);
            b[i] = a[i] + 0.01 * u(rng);
        }
        double worst = 0.0, sq = 0.0, lo = a[0], hi = a[0];
        for (std::size_t i = 0; i < a.size(); ++i) {
            worst = std::max(worst, std::fabs(a[i] - b[i]));
            sq += (a[i] - b[i]) * (a[i] - b[i]);
            lo = std::min(lo, a[i]);
            hi = std::max(hi, a[i]);
        }
        const auto m = compute_metrics<double>(a, b);
        CHECK(m.max_error == worst);
        CHECK(m.mse == doctest::Approx(sq / 1000.0).epsilon(1e-12));
        CHECK(m.psnr == doctest::Approx(20.0 * std::log10((hi - lo) / std::sqrt(sq / 1000.0))).epsilon(1e-12));
    }
}

TEST_CASE("xor-prefix coding does not raise plane entropy on smooth codes") {
    const Dims dims = {33, 31};
    const auto field = testutil::smooth_field(dims, 404);
    const double eb = 1e-5 * testutil::field_range(field);
    const std::string bytes = compress_to_bytes(field, dims, {.eb = eb});
    std::istringstream in(bytes, std::ios::binary);
    ArchiveReader reader(in);
    const auto model = build_error_model(reader.header(), reader.records());
    const auto out = reconstruct_field<double>(reader, full_plan(model));

    auto entropy = [](const std::vector<std::uint8_t> &plane, std::size_t bits) {
        std::size_t ones = 0;
        for (std::size_t i = 0; i < bits; ++i) ones += (plane[i >> 3] >> (i & 7)) & 1u;
        const double p = static_cast<double>(ones) / static_cast<double>(bits);
        if (p <= 0.0 || p >= 1.0) return 0.0;
        return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
    };

    double raw_acc = 0.0, xor_acc = 0.0, weight = 0.0;
    for (const auto &ls : out.session.level) {
        if (ls.merged.empty()) continue;
        auto raw = split(ls.merged);
        auto enc = split(ls.merged);
        xor_encode(enc);
        for (int p = 8; p < 32; ++p) {
            const auto bits = static_cast<double>(ls.merged.size());
            raw_acc += bits * entropy(raw.planes[static_cast<std::size_t>(p)], ls.merged.size());
            xor_acc += bits * entropy(enc.planes[static_cast<std::size_t>(p)], ls.merged.size());
            weight += bits;
        }
    }
    REQUIRE(weight > 0.0);
    CHECK(xor_acc / weight <= raw_acc / weight);
}

TEST_CASE("degenerate and tiny grids survive the full cycle") {
    for (const Dims &dims : {Dims{1}, Dims{2}, Dims{3, 1}, Dims{1, 1, 1, 5}}) {
        CAPTURE(dims);
        const std::size_t n = element_count(dims);
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) values[i] = 0.5 * static_cast<double>(i) - 1.0;
        const std::string bytes = compress_to_bytes(values, dims, {.eb = 1e-4});
        std::istringstream in(bytes, std::ios::binary);
        ArchiveReader reader(in);
        const auto model = build_error_model(reader.header(), reader.records());
        const auto full = reconstruct_field<double>(reader, full_plan(model));
        CHECK(max_abs_error(values, full.values) <= 1e-4);

        RetrievalPlan half;
        half.k.assign(reader.header().levels, 0);
        for (int l = reader.header().progressive_levels + 1; l <= reader.header().levels; ++l) {
            half.k[static_cast<std::size_t>(l - 1)] = 32;
        }
        const auto coarse = reconstruct_field<double>(reader, half);
        const auto refined = refine_field<double>(reader, coarse.session, coarse.values, full_plan(model));
        CHECK(refined.values == full.values);
    }
}

TEST_CASE("worker count does not change the archive or the reconstruction") {
    const Dims dims = {34, 27};
    const auto field = testutil::smooth_field(dims, 321);
    const double eb = 1e-4 * testutil::field_range(field);

    setenv("IPCOMP_THREADS", "1", 1);
    const std::string serial = compress_to_bytes(field, dims, {.eb = eb});
    setenv("IPCOMP_THREADS", "7", 1);
    const std::string parallel = compress_to_bytes(field, dims, {.eb = eb});
    CHECK(serial == parallel);

    std::istringstream in_a(serial, std::ios::binary);
    ArchiveReader ra(in_a);
    const auto model = build_error_model(ra.header(), ra.records());
    const auto out_parallel = reconstruct_field<double>(ra, full_plan(model));
    setenv("IPCOMP_THREADS", "1", 1);
    std::istringstream in_b(serial, std::ios::binary);
    ArchiveReader rb(in_b);
    const auto out_serial = reconstruct_field<double>(rb, full_plan(model));
    unsetenv("IPCOMP_THREADS");
    CHECK(out_parallel.values == out_serial.values);
}

TEST_CASE("one-dimensional loss tables equal the running-max suffix measurement") {
    const Dims dims = {201};
    const auto field = testutil::smooth_field(dims, 1881);
    const double eb = 1e-4 * testutil::field_range(field);
    for (InterpKind kind : {InterpKind::linear, InterpKind::cubic}) {
        const std::string bytes = compress_to_bytes(field, dims, {.eb = eb, .interp = kind});
        std::istringstream in(bytes, std::ios::binary);
        ArchiveReader reader(in);
        const auto model = build_error_model(reader.header(), reader.records());
        const auto out = reconstruct_field<double>(reader, full_plan(model));

        for (int level = 1; level <= reader.header().levels; ++level) {
            const auto &codes = out.session.level[static_cast<std::size_t>(level - 1)].merged;
            REQUIRE(codes.size() == reader.record(level).count);
            double running = 0.0;
            for (int d = 0; d <= 32; ++d) {
                double worst = 0.0;
                const std::uint32_t mask = d == 32 ? 0u : ~((1u << d) - 1u);
                for (std::uint32_t w : codes) {
                    const double diff = 2.0 * eb *
                                        static_cast<double>(static_cast<std::int64_t>(from_negabinary(w & mask)) -
                                                            static_cast<std::int64_t>(from_negabinary(w)));
                    worst = std::max(worst, std::fabs(diff));
                }
                running = std::max(running, worst);
                CHECK(reader.record(level).delta[static_cast<std::size_t>(d)] == running);
            }
        }
    }
}

TEST_CASE("multi-dimensional loss tables stay within the pass-cascade envelope") {
    const Dims dims = {18, 14, 22};
    const auto field = testutil::smooth_field(dims, 909);
    const double eb = 1e-4 * testutil::field_range(field);
    for (InterpKind kind : {InterpKind::linear, InterpKind::cubic}) {
        const double p = amplification(kind);
        double envelope = 0.0;  // 1 + p + ... + p^(passes-1)
        for (std::size_t j = 0; j < dims.size(); ++j) envelope += std::pow(p, static_cast<double>(j));
        const std::string bytes = compress_to_bytes(field, dims, {.eb = eb, .interp = kind});
        std::istringstream in(bytes, std::ios::binary);
        ArchiveReader reader(in);
        for (int level = 1; level <= reader.header().levels; ++level) {
            for (int d = 0; d <= 32; ++d) {
                const double cap = envelope * static_cast<double>(suffix_uncertainty(d)) * 2.0 * eb;
                CHECK(reader.record(level).delta[static_cast<std::size_t>(d)] <= cap * (1.0 + 1e-12));
            }
        }
    }
}
