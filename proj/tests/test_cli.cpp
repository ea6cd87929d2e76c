#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "field_util.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
    json parsed() const { return json::parse(out); }
};

class CliHarness {
   public:
    CliHarness() {
        const char *cli = std::getenv("IPCOMP_CLI");
        REQUIRE_MESSAGE(cli != nullptr, "IPCOMP_CLI must point at the built binary");
        cli_ = cli;
        dir_ = fs::temp_directory_path() / ("ipcomp_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(dir_);
    }
    ~CliHarness() { fs::remove_all(dir_); }

    fs::path path(const std::string &name) const { return dir_ / name; }

    RunResult run(const std::string &args) const {
        const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = cli_ + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        RunResult r;
        r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    void write_field(const fs::path &p, const std::vector<double> &values) const {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char *>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    }

    static std::string slurp(const fs::path &p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    static bool same_bytes(const fs::path &a, const fs::path &b) { return slurp(a) == slurp(b); }

   private:
    std::string cli_;
    fs::path dir_;
};

}  // namespace

TEST_CASE("cli end to end") {
    CliHarness h;
    auto precise = [](double v) {
        std::ostringstream ss;
        ss.precision(17);
        ss << v;
        return ss.str();
    };
    const ipcomp::Dims dims = {20, 24, 28};
    const auto field = testutil::smooth_field(dims, 2024);
    const double range = testutil::field_range(field);
    const double eb = 1e-4 * range;
    const auto input = h.path("field.bin");
    const auto archive = h.path("field.ipc");
    h.write_field(input, field);

    SUBCASE("compress emits a summary and the archive inspects cleanly") {
        std::ostringstream cmd;
        cmd << "compress -i " << input << " -o " << archive << " -d 20 24 28 -t f64 -e " << precise(eb);
        const auto r = h.run(cmd.str());
        REQUIRE(r.exit_code == 0);
        const json j = r.parsed();
        CHECK(j["command"] == "compress");
        CHECK(j["input_bytes"].get<std::uint64_t>() == field.size() * 8);
        CHECK(j["compression_ratio"].get<double>() > 1.0);
        CHECK(j["eb"].get<double>() == eb);
        CHECK(j["interp"] == "cubic");

        const auto ins = h.run("inspect -i " + archive.string());
        REQUIRE(ins.exit_code == 0);
        const json ij = ins.parsed();
        CHECK(ij["dims"] == json::array({20, 24, 28}));
        CHECK(ij["level_records"].size() == ij["levels"].get<std::size_t>());
        CHECK(ij["level_records"][0]["delta"].size() == 33);
        CHECK(ij["level_records"][0]["plane_bytes"].size() == 32);
    }

    SUBCASE("retrieve honours the bound and metrics confirms it") {
        std::ostringstream cmd;
        cmd << "compress -i " << input << " -o " << archive << " -d 20 24 28 -t f64 -e " << precise(eb)
            << " --interp linear";
        REQUIRE(h.run(cmd.str()).exit_code == 0);

        const auto out = h.path("full.bin");
        std::ostringstream rt;
        rt << "retrieve -i " << archive << " -o " << out << " --abs-error " << precise(eb);
        const auto r = h.run(rt.str());
        REQUIRE(r.exit_code == 0);
        const json j = r.parsed();
        CHECK(j["bytes_loaded"].get<std::uint64_t>() <= j["payload_bytes_total"].get<std::uint64_t>());

        std::ostringstream mt;
        mt << "metrics " << input << " " << out << " -d 20 24 28 -t f64";
        const auto m = h.run(mt.str());
        REQUIRE(m.exit_code == 0);
        CHECK(m.parsed()["max_err"].get<double>() <= eb);

        // identical inputs report an infinite psnr sentinel
        const auto self = h.run("metrics " + input.string() + " " + input.string() + " -d 20 24 28 -t f64");
        CHECK(self.parsed()["psnr"] == "inf");
    }

    SUBCASE("relative requests resolve against the recorded range") {
        std::ostringstream cmd;
        cmd << "compress -i " << input << " -o " << archive << " -d 20 24 28 -t f64 -e " << precise(eb);
        REQUIRE(h.run(cmd.str()).exit_code == 0);

        const double rel = 1e-3;
        const auto out_rel = h.path("rel.bin"), out_abs = h.path("abs.bin");
        std::ostringstream c1, c2;
        c1 << "retrieve -i " << archive << " -o " << out_rel << " --rel-error " << precise(rel);
        c2 << "retrieve -i " << archive << " -o " << out_abs << " --abs-error " << precise(rel * range);
        const auto r1 = h.run(c1.str());
        const auto r2 = h.run(c2.str());
        REQUIRE(r1.exit_code == 0);
        REQUIRE(r2.exit_code == 0);
        CHECK(r1.parsed()["bytes_loaded"] == r2.parsed()["bytes_loaded"]);
        CHECK(CliHarness::same_bytes(out_rel, out_abs));
    }

    SUBCASE("bitrate requests respect the byte budget") {
        std::ostringstream cmd;
        cmd << "compress -i " << input << " -o " << archive << " -d 20 24 28 -t f64 -e " << precise(eb);
        REQUIRE(h.run(cmd.str()).exit_code == 0);

        const double bitrate = 2.0;
        const auto out = h.path("rate.bin");
        std::ostringstream rt;
        rt << "retrieve -i " << archive << " -o " << out << " --bitrate " << bitrate;
        const auto r = h.run(rt.str());
        REQUIRE(r.exit_code == 0);
        const auto loaded = r.parsed()["bytes_loaded"].get<std::uint64_t>();
        CHECK(loaded <= static_cast<std::uint64_t>(bitrate * static_cast<double>(field.size()) / 8.0));
    }

    SUBCASE("infeasible requests exit nonzero with a machine-readable reason") {
        // keep two levels non-progressive so the mandatory payload is nonzero
        std::ostringstream cmd;
        cmd << "compress -i " << input << " -o " << archive << " -d 20 24 28 -t f64 -e " << precise(eb)
            << " --lp 2";
        REQUIRE(h.run(cmd.str()).exit_code == 0);

        std::ostringstream rt;
        rt << "retrieve -i " << archive << " -o " << h.path("x.bin") << " --abs-error " << precise(eb * 0.01);
        const auto r = h.run(rt.str());
        CHECK(r.exit_code == 2);
        CHECK(r.parsed()["error"] == "infeasible_request");

        const auto r2 = h.run("retrieve -i " + archive.string() + " -o " + h.path("x.bin").string() + " --bytes 1");
        CHECK(r2.exit_code == 2);
        CHECK(r2.parsed()["error"] == "infeasible_request");
    }

    SUBCASE("refine to a stricter request matches a fresh retrieve byte for byte") {
        std::ostringstream cmd;
        cmd << "compress -i " << input << " -o " << archive << " -d 20 24 28 -t f64 -e " << precise(eb);
        REQUIRE(h.run(cmd.str()).exit_code == 0);

        const auto coarse = h.path("coarse.bin");
        const auto session = h.path("session.ips");
        std::ostringstream c1;
        c1 << "retrieve -i " << archive << " -o " << coarse << " --abs-error " << precise(256.0 * eb) << " --session "
           << session;
        const auto r1 = h.run(c1.str());
        REQUIRE(r1.exit_code == 0);

        const auto refined = h.path("refined.bin");
        std::ostringstream c2;
        c2 << "refine -i " << archive << " --session " << session << " --prev " << coarse << " -o " << refined
           << " --abs-error " << precise(eb);
        const auto r2 = h.run(c2.str());
        REQUIRE(r2.exit_code == 0);
        CHECK(r2.parsed()["incremental_bytes_loaded"].get<std::uint64_t>() <
              r1.parsed()["payload_bytes_total"].get<std::uint64_t>());

        const auto direct = h.path("direct.bin");
        std::ostringstream c3;
        c3 << "retrieve -i " << archive << " -o " << direct << " --abs-error " << precise(eb);
        REQUIRE(h.run(c3.str()).exit_code == 0);
        CHECK(CliHarness::same_bytes(refined, direct));
    }

    SUBCASE("size mismatches are reported") {
        std::ostringstream cmd;
        cmd << "compress -i " << input << " -o " << archive << " -d 20 24 27 -t f64 -e " << precise(eb);
        const auto r = h.run(cmd.str());
        CHECK(r.exit_code == 1);
        CHECK(r.parsed()["error"] == "failed");
    }
}
