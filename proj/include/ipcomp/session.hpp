#ifndef IPCOMP_SESSION_HPP
#define IPCOMP_SESSION_HPP

#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

#include "ipcomp/archive.hpp"

namespace ipcomp {

inline constexpr char kSessionMagic[4] = {'I', 'P', 'S', '1'};

// What a retrieval leaves behind so a later request can refine instead of
// reloading: per level, how many planes were loaded and the merged codewords
// they produced (low digits zeroed). Binds to exactly one archive via the
// index crc.
struct RetrievalSession {
    std::uint32_t archive_crc = 0;
    // [l-1]; non-progressive levels keep k = 32 and no codewords
    struct LevelState {
        int planes_loaded = 0;
        std::vector<std::uint32_t> merged;
    };
    std::vector<LevelState> level;

    RetrievalPlan plan() const {
        RetrievalPlan p;
        p.k.reserve(level.size());
        for (const auto &ls : level) p.k.push_back(ls.planes_loaded);
        return p;
    }
};

void write_session(std::ostream &out, const RetrievalSession &session);

// needs the archive's level records to size and check the codeword arrays
RetrievalSession read_session(std::istream &in, const ArchiveReader &archive);

}  // namespace ipcomp

#endif
