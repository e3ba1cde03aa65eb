#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "framot/mot_io.hpp"

namespace framot {

/// The eight sampling factors of the multi-frame-rate benchmark.
inline const std::vector<int> kDefaultKSet{1, 2, 4, 8, 16, 25, 36, 50};

/// One simulated low-frame-rate video cut from a parent sequence.
struct ResampledSequence {
    std::string parent;
    int k = 1;
    int offset = 1;  // 1..k
    double effective_fps = 0.0;
    std::vector<int> frame_map;  // new index j (0-based here) -> original frame (1-based)
    Sequence sequence;           // GT remapped to frames 1..frame_map.size()

    /// Stable name "<parent>_k<k>_o<offset>".
    static std::string video_name(const std::string& parent, int k, int offset);
};

/// Splits a sequence into k strided videos: video i holds original frames
/// (j-1)k + i for j = 1, 2, ... Throws ValidationError when k < 1.
std::vector<ResampledSequence> resample(const Sequence& sequence, int k);

struct GapStats {
    double mean_frames = 0.0;
    double median_frames = 0.0;
    double mean_ms = 0.0;
    double median_ms = 0.0;
    std::size_t gap_count = 0;

    std::string to_json() const;
};

/// Random decomposition into k videos of about N/k frames each, drawn without
/// replacement from a shrinking frame pool.
std::pair<std::vector<ResampledSequence>, GapStats> dynamic_resample(const Sequence& sequence, int k,
                                                                    std::uint64_t seed);

/// Rebuilds the GT of `parent` restricted to `frame_map`, renumbering frames.
Sequence remap_sequence(const Sequence& parent, const std::vector<int>& frame_map, std::string name,
                        double fps);

/// Extra info-file keys describing a resampled video.
InfoMap resample_info(const ResampledSequence& video);

}  // namespace framot
