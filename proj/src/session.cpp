#include "ipcomp/session.hpp"

#include <cstring>
#include <stdexcept>

namespace ipcomp {

void write_session(std::ostream &out, const RetrievalSession &session) {
    ByteWriter w;
    w.raw(kSessionMagic, 4);
    w.u32(session.archive_crc);
    for (std::size_t i = session.level.size(); i-- > 0;) {  // coarsest first
        const auto &ls = session.level[i];
        w.u8(static_cast<std::uint8_t>(ls.planes_loaded));
        ByteWriter codes;
        for (std::uint32_t c : ls.merged) codes.u32(c);
        const EncodedBlock block =
            backend_encode(codes.bytes, kDefaultBackend, static_cast<std::uint64_t>(codes.bytes.size()) * 8);
        write_block(w, block);
    }
    out.write(reinterpret_cast<const char *>(w.bytes.data()), static_cast<std::streamsize>(w.bytes.size()));
    if (!out) throw std::runtime_error("failed to write session stream");
}

RetrievalSession read_session(std::istream &in, const ArchiveReader &archive) {
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ByteReader r(bytes.data(), bytes.size());

    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kSessionMagic, 4) != 0) throw std::runtime_error("not a session file: bad magic");

    RetrievalSession session;
    session.archive_crc = r.u32();
    if (session.archive_crc != archive.identity()) {
        throw std::runtime_error("session does not belong to this archive");
    }

    const int levels = archive.header().levels;
    const int lp = archive.header().progressive_levels;
    session.level.resize(static_cast<std::size_t>(levels));
    for (int level = levels; level >= 1; --level) {
        auto &ls = session.level[static_cast<std::size_t>(level - 1)];
        ls.planes_loaded = r.u8();
        if (ls.planes_loaded < 0 || ls.planes_loaded > 32) throw std::runtime_error("session plane count out of range");
        if (level > lp && ls.planes_loaded != 32) throw std::runtime_error("session has partial non-progressive level");
        EncodedBlock block = read_block(r);
        const auto raw = backend_decode(block);
        if (level <= lp) {
            const std::uint64_t count = archive.record(level).count;
            if (raw.size() != count * 4) throw std::runtime_error("session codeword array has wrong length");
            ls.merged.resize(count);
            ByteReader cr(raw.data(), raw.size());
            for (auto &c : ls.merged) c = cr.u32();
        } else if (!raw.empty()) {
            throw std::runtime_error("session stores codewords for a non-progressive level");
        }
    }
    if (r.remaining() != 0) throw std::runtime_error("session file has trailing bytes");
    return session;
}

}  // namespace ipcomp
