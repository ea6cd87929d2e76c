#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ipcomp/pipeline.hpp"
#include "json.hpp"

using nlohmann::json;
using namespace ipcomp;

namespace {

json finite_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    if (std::isnan(v)) return json("nan");
    return json(v);
}

void emit(const json &j) { std::cout << j.dump() << "\n"; }

std::vector<std::uint8_t> read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string &path, const void *data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(static_cast<const char *>(data), static_cast<std::streamsize>(size));
    if (!out) throw std::runtime_error("failed while writing " + path);
}

ScalarKind parse_scalar(const std::string &name) {
    if (name == "f32") return ScalarKind::f32;
    if (name == "f64") return ScalarKind::f64;
    throw CLI::ValidationError("-t", "scalar type must be f32 or f64");
}

InterpKind parse_interp(const std::string &name) {
    if (name == "linear") return InterpKind::linear;
    if (name == "cubic") return InterpKind::cubic;
    throw CLI::ValidationError("--interp", "interpolation must be linear or cubic");
}

template <class T>
std::vector<T> field_from_bytes(const std::vector<std::uint8_t> &bytes, std::size_t n) {
    std::vector<T> values(n);
    std::memcpy(values.data(), bytes.data(), n * sizeof(T));
    return values;
}

struct FidelityRequest {
    enum class Mode { absolute, relative, bitrate, bytes } mode;
    double value;
};

// attach the four mutually exclusive fidelity flags to a subcommand
struct FidelityFlags {
    double abs_error = 0, rel_error = 0, bitrate = 0;
    std::uint64_t bytes = 0;
    CLI::Option *abs_opt, *rel_opt, *rate_opt, *bytes_opt;

    void attach(CLI::App *cmd) {
        auto *group = cmd->add_option_group("fidelity", "retrieval fidelity target");
        abs_opt = group->add_option("--abs-error", abs_error, "maximum absolute point-wise error");
        rel_opt = group->add_option("--rel-error", rel_error, "maximum error relative to the recorded value range");
        rate_opt = group->add_option("--bitrate", bitrate, "loaded bits per scalar value");
        bytes_opt = group->add_option("--bytes", bytes, "loaded payload byte budget");
        group->require_option(1);
    }

    FidelityRequest request() const {
        if (abs_opt->count()) return {FidelityRequest::Mode::absolute, abs_error};
        if (rel_opt->count()) return {FidelityRequest::Mode::relative, rel_error};
        if (rate_opt->count()) return {FidelityRequest::Mode::bitrate, bitrate};
        return {FidelityRequest::Mode::bytes, static_cast<double>(bytes)};
    }
};

RetrievalPlan plan_for_request(const ArchiveReader &reader, const ErrorModel &model, const FidelityRequest &req,
                               double &estimated_bound_out) {
    if (!(req.value > 0)) throw InfeasibleRequest("fidelity value must be positive");
    RetrievalPlan plan;
    switch (req.mode) {
        case FidelityRequest::Mode::absolute:
            plan = plan_for_error(model, req.value);
            break;
        case FidelityRequest::Mode::relative:
            plan = plan_for_error(model, req.value * reader.header().range);
            break;
        case FidelityRequest::Mode::bitrate: {
            const double n = static_cast<double>(element_count(reader.header().dims));
            plan = plan_for_size(model, static_cast<std::uint64_t>(req.value * n / 8.0));
            break;
        }
        case FidelityRequest::Mode::bytes:
            plan = plan_for_size(model, static_cast<std::uint64_t>(req.value));
            break;
    }
    estimated_bound_out = bound_for_plan(model, plan);
    return plan;
}

int cmd_compress(const std::string &input, const std::string &output, const Dims &dims, ScalarKind scalar,
                 double abs_eb, double rel_eb, InterpKind interp, int lp) {
    validate_dims(dims);
    const std::size_t n = element_count(dims);
    const auto bytes = read_file(input);
    if (bytes.size() != n * scalar_width(scalar)) {
        throw std::runtime_error("input size mismatch: expected " + std::to_string(n * scalar_width(scalar)) +
                                 " bytes, found " + std::to_string(bytes.size()));
    }

    ArchiveData archive;
    auto run = [&](auto tag) {
        using T = decltype(tag);
        const auto values = field_from_bytes<T>(bytes, n);
        double eb = abs_eb;
        if (rel_eb > 0) {
            double lo = static_cast<double>(values[0]), hi = lo;
            for (const T v : values) {
                lo = std::min(lo, static_cast<double>(v));
                hi = std::max(hi, static_cast<double>(v));
            }
            eb = rel_eb * (hi - lo);
            if (!(eb > 0)) throw std::runtime_error("relative bound is degenerate: the input has zero range");
        }
        CompressOptions opt;
        opt.eb = eb;
        opt.interp = interp;
        opt.progressive_levels = lp;
        archive = compress_field<T>(std::span<const T>(values), dims, opt);
    };
    if (scalar == ScalarKind::f32) run(float{});
    else run(double{});

    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + output + " for writing");
    write_archive(out, archive);
    out.flush();
    const std::uint64_t archive_bytes = static_cast<std::uint64_t>(out.tellp());

    std::uint64_t outliers = 0;
    for (const auto &rec : archive.records) outliers += rec.outlier_count;

    emit(json{{"command", "compress"},
              {"input_bytes", bytes.size()},
              {"archive_bytes", archive_bytes},
              {"compression_ratio", static_cast<double>(bytes.size()) / static_cast<double>(archive_bytes)},
              {"bitrate", 8.0 * static_cast<double>(archive_bytes) / static_cast<double>(n)},
              {"eb", archive.header.eb},
              {"range", archive.header.range},
              {"levels", archive.header.levels},
              {"progressive_levels", archive.header.progressive_levels},
              {"interp", name(archive.header.interp)},
              {"outliers", outliers}});
    return 0;
}

int cmd_retrieve(const std::string &archive_path, const std::string &output, const FidelityRequest &req,
                 const std::string &session_path) {
    std::ifstream in(archive_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + archive_path);
    ArchiveReader reader(in);
    const auto model = build_error_model(reader.header(), reader.records());

    double bound = 0;
    const RetrievalPlan plan = plan_for_request(reader, model, req, bound);
    const std::size_t n = element_count(reader.header().dims);

    std::uint64_t loaded = 0;
    auto run = [&](auto tag) {
        using T = decltype(tag);
        auto out = reconstruct_field<T>(reader, plan);
        loaded = out.stats.payload_bytes_loaded;
        write_file(output, out.values.data(), out.values.size() * sizeof(T));
        if (!session_path.empty()) {
            std::ofstream sess(session_path, std::ios::binary | std::ios::trunc);
            if (!sess) throw std::runtime_error("cannot open " + session_path + " for writing");
            write_session(sess, out.session);
        }
    };
    if (reader.header().scalar == ScalarKind::f32) run(float{});
    else run(double{});

    emit(json{{"command", "retrieve"},
              {"bytes_loaded", loaded},
              {"payload_bytes_total", total_payload_bytes(model)},
              {"index_bytes", reader.index_bytes()},
              {"estimated_error_bound", bound},
              {"bitrate_loaded", 8.0 * static_cast<double>(loaded) / static_cast<double>(n)},
              {"output", output},
              {"session", session_path.empty() ? json(nullptr) : json(session_path)}});
    return 0;
}

int cmd_refine(const std::string &archive_path, const std::string &session_path, const std::string &prev_path,
               const std::string &output, const FidelityRequest &req) {
    std::ifstream in(archive_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + archive_path);
    ArchiveReader reader(in);
    const auto model = build_error_model(reader.header(), reader.records());

    std::ifstream sess_in(session_path, std::ios::binary);
    if (!sess_in) throw std::runtime_error("cannot open " + session_path);
    const RetrievalSession session = read_session(sess_in, reader);

    double bound = 0;
    RetrievalPlan plan = plan_for_request(reader, model, req, bound);
    for (std::size_t i = 0; i < plan.k.size(); ++i) {  // refinement only ever adds planes
        plan.k[i] = std::max(plan.k[i], session.level[i].planes_loaded);
    }
    bound = bound_for_plan(model, plan);

    const std::size_t n = element_count(reader.header().dims);
    const auto prev_bytes = read_file(prev_path);
    if (prev_bytes.size() != n * scalar_width(reader.header().scalar)) {
        throw std::runtime_error("previous reconstruction has the wrong size for this archive");
    }

    std::uint64_t loaded = 0;
    auto run = [&](auto tag) {
        using T = decltype(tag);
        const auto prev = field_from_bytes<T>(prev_bytes, n);
        auto out = refine_field<T>(reader, session, std::span<const T>(prev), plan);
        loaded = out.stats.payload_bytes_loaded;
        write_file(output, out.values.data(), out.values.size() * sizeof(T));
        std::ofstream sess_out(session_path, std::ios::binary | std::ios::trunc);
        if (!sess_out) throw std::runtime_error("cannot open " + session_path + " for writing");
        write_session(sess_out, out.session);
    };
    if (reader.header().scalar == ScalarKind::f32) run(float{});
    else run(double{});

    emit(json{{"command", "refine"},
              {"incremental_bytes_loaded", loaded},
              {"estimated_error_bound", bound},
              {"bitrate_loaded", 8.0 * static_cast<double>(loaded) / static_cast<double>(n)},
              {"output", output},
              {"session", session_path}});
    return 0;
}

int cmd_inspect(const std::string &archive_path) {
    std::ifstream in(archive_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + archive_path);
    ArchiveReader reader(in);
    const auto &h = reader.header();

    json levels = json::array();
    for (int level = h.levels; level >= 1; --level) {
        const auto &rec = reader.record(level);
        json planes = json::array();
        json delta = json::array();
        for (const auto &p : rec.planes) planes.push_back(p.length);
        for (double d : rec.delta) delta.push_back(d);
        levels.push_back(json{{"level", level},
                              {"points", rec.count},
                              {"outliers", rec.outlier_count},
                              {"outlier_bytes", rec.outlier_length},
                              {"delta", delta},
                              {"plane_bytes", planes}});
    }
    const json j{{"command", "inspect"},
                 {"version", h.version},
                 {"scalar", name(h.scalar)},
                 {"interp", name(h.interp)},
                 {"dims", h.dims},
                 {"eb", h.eb},
                 {"range", h.range},
                 {"levels", h.levels},
                 {"progressive_levels", h.progressive_levels},
                 {"anchor_cap", h.anchor_cap},
                 {"payload_bytes", h.payload_bytes},
                 {"index_bytes", reader.index_bytes()},
                 {"level_records", levels}};

    std::cerr << "archive " << archive_path << ": " << name(h.scalar) << ", " << name(h.interp) << ", eb=" << h.eb
              << ", levels=" << static_cast<int>(h.levels) << " (progressive through "
              << static_cast<int>(h.progressive_levels) << "), payload=" << h.payload_bytes << " bytes\n";
    for (int level = h.levels; level >= 1; --level) {
        const auto &rec = reader.record(level);
        std::uint64_t plane_total = 0;
        for (const auto &p : rec.planes) plane_total += p.length;
        std::cerr << "  level " << level << ": " << rec.count << " points, " << rec.outlier_count << " outliers, "
                  << plane_total << " plane bytes, full-drop loss " << rec.delta[32] << "\n";
    }
    emit(j);
    return 0;
}

int cmd_metrics(const std::string &original, const std::string &reconstructed, const Dims &dims, ScalarKind scalar) {
    validate_dims(dims);
    const std::size_t n = element_count(dims);
    const auto a = read_file(original);
    const auto b = read_file(reconstructed);
    if (a.size() != n * scalar_width(scalar) || b.size() != a.size()) {
        throw std::runtime_error("field sizes do not match the given dimensions");
    }
    FieldMetrics m;
    if (scalar == ScalarKind::f32) {
        const auto fa = field_from_bytes<float>(a, n);
        const auto fb = field_from_bytes<float>(b, n);
        m = compute_metrics<float>(fa, fb);
    } else {
        const auto fa = field_from_bytes<double>(a, n);
        const auto fb = field_from_bytes<double>(b, n);
        m = compute_metrics<double>(fa, fb);
    }
    emit(json{{"command", "metrics"}, {"max_err", m.max_error}, {"mse", m.mse}, {"psnr", finite_or_inf(m.psnr)}});
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"error-bounded progressive compressor for multidimensional floating-point fields"};
    app.require_subcommand(1);

    // compress
    auto *compress = app.add_subcommand("compress", "compress a raw field into a progressive archive");
    std::string c_in, c_out, c_type = "f64", c_interp = "cubic";
    std::vector<std::size_t> c_dims;
    double c_abs = 0, c_rel = 0;
    int c_lp = 0;
    compress->add_option("-i,--input", c_in, "raw row-major field")->required();
    compress->add_option("-o,--output", c_out, "archive path")->required();
    compress->add_option("-d,--dims", c_dims, "extents, slowest dimension first")->required()->expected(1, 4);
    compress->add_option("-t,--type", c_type, "scalar type: f32 or f64");
    auto *eb_group = compress->add_option_group("bound", "compression error bound");
    auto *c_abs_opt = eb_group->add_option("-e,--abs-eb", c_abs, "absolute error bound");
    eb_group->add_option("-r,--rel-eb", c_rel, "error bound relative to the value range");
    eb_group->require_option(1);
    compress->add_option("--interp", c_interp, "interpolation kind: linear or cubic");
    compress->add_option("--lp", c_lp, "coarsest level kept progressively loadable (default: all)");

    // retrieve
    auto *retrieve = app.add_subcommand("retrieve", "reconstruct a field from an archive at a fidelity target");
    std::string r_in, r_out, r_session;
    FidelityFlags r_fid;
    retrieve->add_option("-i,--input", r_in, "archive path")->required();
    retrieve->add_option("-o,--output", r_out, "reconstructed field path")->required();
    r_fid.attach(retrieve);
    retrieve->add_option("--session", r_session, "write a session file for later refinement");

    // refine
    auto *refine = app.add_subcommand("refine", "raise the fidelity of a previous retrieval in place");
    std::string f_in, f_session, f_prev, f_out;
    FidelityFlags f_fid;
    refine->add_option("-i,--input", f_in, "archive path")->required();
    refine->add_option("--session", f_session, "session file from the previous retrieval")->required();
    refine->add_option("--prev", f_prev, "previous reconstructed field")->required();
    refine->add_option("-o,--output", f_out, "refined field path")->required();
    f_fid.attach(refine);

    // inspect
    auto *inspect = app.add_subcommand("inspect", "dump header, level records and block sizes");
    std::string i_in;
    inspect->add_option("-i,--input", i_in, "archive path")->required();

    // metrics
    auto *metrics = app.add_subcommand("metrics", "compare two raw fields");
    std::string m_orig, m_recon, m_type = "f64";
    std::vector<std::size_t> m_dims;
    metrics->add_option("original", m_orig, "original field")->required();
    metrics->add_option("reconstructed", m_recon, "reconstructed field")->required();
    metrics->add_option("-d,--dims", m_dims, "extents, slowest dimension first")->required()->expected(1, 4);
    metrics->add_option("-t,--type", m_type, "scalar type: f32 or f64");

    CLI11_PARSE(app, argc, argv);

    try {
        if (compress->parsed()) {
            return cmd_compress(c_in, c_out, Dims(c_dims.begin(), c_dims.end()), parse_scalar(c_type),
                                c_abs_opt->count() ? c_abs : 0.0, c_abs_opt->count() ? 0.0 : c_rel,
                                parse_interp(c_interp), c_lp);
        }
        if (retrieve->parsed()) return cmd_retrieve(r_in, r_out, r_fid.request(), r_session);
        if (refine->parsed()) return cmd_refine(f_in, f_session, f_prev, f_out, f_fid.request());
        if (inspect->parsed()) return cmd_inspect(i_in);
        if (metrics->parsed()) return cmd_metrics(m_orig, m_recon, Dims(m_dims.begin(), m_dims.end()), parse_scalar(m_type));
    } catch (const InfeasibleRequest &e) {
        emit(json{{"error", "infeasible_request"}, {"message", e.what()}});
        std::cerr << "infeasible request: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        emit(json{{"error", "failed"}, {"message", e.what()}});
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
