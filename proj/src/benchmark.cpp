#include "framot/benchmark.hpp"

#include <cstdio>
#include <map>
#include <set>

#include "framot/error.hpp"
#include "framot/seeding.hpp"

namespace framot {

int default_jobs() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

std::vector<FrameDetections> synthesize_detections(const Sequence& sequence, const NoiseModel& noise,
                                                   int embedding_dim, std::uint64_t seed) {
    std::set<int> ids;
    for (const auto& e : sequence.gt) ids.insert(e.identity);
    const std::uint64_t s = derive_seed(seed, hash_name(sequence.name));
    const IdentityBank bank = make_identity_bank({ids.begin(), ids.end()}, embedding_dim, s);
    return detect_sequence(sequence, noise, bank, splitmix64(s));
}

Benchmark build_benchmark(const std::vector<Sequence>& sequences,
                          const std::vector<std::vector<FrameDetections>>& detections, const std::vector<int>& k_set) {
    if (detections.size() != sequences.size()) throw ValidationError("one detection list per sequence is required");
    Benchmark b;
    b.sequences = sequences;
    b.k_set = k_set;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        if (detections[s].size() != static_cast<std::size_t>(sequences[s].length)) {
            throw ValidationError("detections of " + sequences[s].name + " do not cover every frame");
        }
        for (int k : k_set) {
            for (auto& video : resample(sequences[s], k)) {
                BenchmarkVideo v;
                v.detections.reserve(video.frame_map.size());
                for (int f : video.frame_map) v.detections.push_back(detections[s][static_cast<std::size_t>(f - 1)]);
                v.video = std::move(video);
                b.videos.push_back(std::move(v));
            }
        }
    }
    return b;
}

Benchmark build_benchmark(const std::vector<Sequence>& sequences, const std::vector<int>& k_set,
                          const NoiseModel& noise, int embedding_dim, std::uint64_t seed) {
    noise.validate();
    std::vector<std::vector<FrameDetections>> detections;
    detections.reserve(sequences.size());
    for (const auto& s : sequences) detections.push_back(synthesize_detections(s, noise, embedding_dim, seed));
    return build_benchmark(sequences, detections, k_set);
}

std::vector<Sequence> make_synthetic_dataset(const SceneConfig& scene, int count, std::uint64_t seed,
                                             const std::string& prefix) {
    std::vector<Sequence> out;
    for (int i = 1; i <= count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "-%02d", i);
        out.push_back(make_synthetic_sequence(scene, derive_seed(seed, static_cast<std::uint64_t>(i)), prefix + name));
    }
    return out;
}

std::vector<TrackingOutput> track_benchmark(const Benchmark& benchmark, const AssociationModel& model,
                                            const TrackerConfig& config, int jobs, bool keep_patterns) {
    return parallel_map(benchmark.videos.size(), jobs, [&](std::size_t i) {
        const auto& v = benchmark.videos[i];
        if (keep_patterns) {
            return track_sequence(v.detections, model, config, v.video.effective_fps, v.video.sequence.width,
                                  v.video.sequence.height, v.video.k);
        }
        Tracker tracker(model, config, v.video.effective_fps, v.video.sequence.width, v.video.sequence.height,
                        v.video.k);
        TrackingOutput out;
        for (const auto& f : v.detections) {
            const auto boxes = tracker.step(f);
            out.result.boxes.insert(out.result.boxes.end(), boxes.begin(), boxes.end());
        }
        out.result.normalize();
        return out;
    });
}

BenchmarkEvaluation evaluate_benchmark(const Benchmark& benchmark, const std::vector<TrackResult>& results, int jobs,
                                       double iou_threshold) {
    if (results.size() != benchmark.videos.size()) throw ValidationError("one result per benchmark video is required");
    const auto counts = parallel_map(results.size(), jobs, [&](std::size_t i) {
        const auto& seq = benchmark.videos[i].video.sequence;
        return evaluate(series_from_gt(seq), series_from_result(results[i], seq.length), iou_threshold);
    });

    std::map<std::pair<std::string, int>, EvalCounts> by_sequence;
    std::map<int, EvalCounts> by_k;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& v = benchmark.videos[i].video;
        by_sequence[{v.parent, v.k}] += counts[i];
        by_k[v.k] += counts[i];
    }

    BenchmarkEvaluation out;
    for (const auto& seq : benchmark.sequences) {
        for (int k : benchmark.k_set) {
            const auto it = by_sequence.find({seq.name, k});
            if (it != by_sequence.end()) out.per_sequence.push_back(summarize(it->second, seq.name, k));
        }
    }
    for (int k : benchmark.k_set) {
        const auto it = by_k.find(k);
        if (it != by_k.end()) out.per_k.push_back(summarize(it->second, "all", k));
    }
    out.aggregate = aggregate(out.per_k);
    return out;
}

BenchmarkEvaluation run_benchmark(const Benchmark& benchmark, const AssociationModel& model,
                                  const TrackerConfig& config, int jobs) {
    const auto tracked = track_benchmark(benchmark, model, config, jobs);
    std::vector<TrackResult> results;
    results.reserve(tracked.size());
    for (const auto& t : tracked) results.push_back(t.result);
    return evaluate_benchmark(benchmark, results, jobs);
}

}  // namespace framot
