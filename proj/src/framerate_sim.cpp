#include "framot/framerate_sim.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "framot/error.hpp"
#include "framot/seeding.hpp"

namespace framot {

std::string ResampledSequence::video_name(const std::string& parent, int k, int offset) {
    return parent + "_k" + std::to_string(k) + "_o" + std::to_string(offset);
}

Sequence remap_sequence(const Sequence& parent, const std::vector<int>& frame_map, std::string name,
                        double fps) {
    Sequence out;
    out.name = std::move(name);
    out.fps = fps;
    out.width = parent.width;
    out.height = parent.height;
    out.length = static_cast<int>(frame_map.size());

    std::vector<int> new_index(static_cast<std::size_t>(parent.length) + 1, 0);
    for (std::size_t j = 0; j < frame_map.size(); ++j) {
        new_index[static_cast<std::size_t>(frame_map[j])] = static_cast<int>(j) + 1;
    }
    for (const auto& e : parent.gt) {
        if (e.frame < 1 || e.frame > parent.length) continue;
        const int j = new_index[static_cast<std::size_t>(e.frame)];
        if (j == 0) continue;
        GtEntry r = e;
        r.frame = j;
        out.gt.push_back(r);
    }
    std::stable_sort(out.gt.begin(), out.gt.end(),
                     [](const GtEntry& a, const GtEntry& b) { return a.frame < b.frame; });
    return out;
}

std::vector<ResampledSequence> resample(const Sequence& sequence, int k) {
    if (k < 1) throw ValidationError("sampling factor k must be >= 1");
    std::vector<ResampledSequence> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 1; i <= k; ++i) {
        ResampledSequence r;
        r.parent = sequence.name;
        r.k = k;
        r.offset = i;
        r.effective_fps = sequence.fps / k;
        for (int frame = i; frame <= sequence.length; frame += k) r.frame_map.push_back(frame);
        r.sequence = remap_sequence(sequence, r.frame_map, ResampledSequence::video_name(sequence.name, k, i),
                                    r.effective_fps);
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

double median_of(std::vector<int> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string GapStats::to_json() const {
    return "{\"mean_frames\":" + format_number(mean_frames) + ",\"median_frames\":" + format_number(median_frames) +
           ",\"mean_ms\":" + format_number(mean_ms) + ",\"median_ms\":" + format_number(median_ms) +
           ",\"gap_count\":" + std::to_string(gap_count) + "}";
}

std::pair<std::vector<ResampledSequence>, GapStats> dynamic_resample(const Sequence& sequence, int k,
                                                                    std::uint64_t seed) {
    if (k < 1) throw ValidationError("sampling factor k must be >= 1");
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));

    std::vector<int> pool(static_cast<std::size_t>(sequence.length));
    std::iota(pool.begin(), pool.end(), 1);

    std::vector<ResampledSequence> videos;
    std::vector<int> gaps;
    for (int t = 0; t < k; ++t) {
        const std::size_t take = pool.size() / static_cast<std::size_t>(k - t);
        // Partial Fisher-Yates: the first `take` slots become the draw.
        for (std::size_t i = 0; i < take; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        ResampledSequence r;
        r.parent = sequence.name;
        r.k = k;
        r.offset = t + 1;
        r.effective_fps = sequence.fps / k;
        r.frame_map.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
        std::sort(r.frame_map.begin(), r.frame_map.end());
        pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));

        for (std::size_t j = 1; j < r.frame_map.size(); ++j) gaps.push_back(r.frame_map[j] - r.frame_map[j - 1]);
        r.sequence = remap_sequence(sequence, r.frame_map,
                                    ResampledSequence::video_name(sequence.name, k, t + 1) + "_dyn",
                                    r.effective_fps);
        videos.push_back(std::move(r));
    }

    GapStats stats;
    stats.gap_count = gaps.size();
    if (!gaps.empty()) {
        stats.mean_frames = std::accumulate(gaps.begin(), gaps.end(), 0.0) / static_cast<double>(gaps.size());
        stats.median_frames = median_of(gaps);
    }
    stats.mean_ms = stats.mean_frames * 1000.0 / sequence.fps;
    stats.median_ms = stats.median_frames * 1000.0 / sequence.fps;
    return {std::move(videos), stats};
}

InfoMap resample_info(const ResampledSequence& video) {
    return {{"parent", video.parent},
            {"k", std::to_string(video.k)},
            {"offset", std::to_string(video.offset)},
            {"effective_fps", format_number(video.effective_fps)}};
}

}  // namespace framot
