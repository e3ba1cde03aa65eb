#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "framot/detection.hpp"
#include "framot/faam.hpp"
#include "framot/framerate_sim.hpp"
#include "framot/metrics.hpp"
#include "framot/synth_detector.hpp"
#include "framot/tracker.hpp"

namespace framot {

/// Runs fn(0..count-1) on up to `jobs` threads and returns the results in
/// index order, so the output does not depend on scheduling. The first
/// exception thrown by any task is rethrown.
template <typename Fn>
auto parallel_map(std::size_t count, int jobs, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using Result = decltype(fn(std::size_t{}));
    std::vector<Result> out(count);
    const auto workers = static_cast<std::size_t>(std::clamp<long>(jobs, 1, static_cast<long>(std::max<std::size_t>(count, 1))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

/// Worker count used when none is given: the hardware concurrency, at least 1.
int default_jobs();

/// One strided video together with the detections of its frames.
struct BenchmarkVideo {
    ResampledSequence video;
    std::vector<FrameDetections> detections;  // index 0 is video frame 1
};

/// Multi-frame-rate benchmark: every sequence decomposed for every k.
/// Videos are ordered by sequence, then k (in k_set order), then offset.
struct Benchmark {
    std::vector<Sequence> sequences;
    std::vector<int> k_set;
    std::vector<BenchmarkVideo> videos;
};

/// Detections for every frame of a sequence from the synthetic oracle. The
/// stream depends on (seed, sequence name), so sequences are independent.
std::vector<FrameDetections> synthesize_detections(const Sequence& sequence, const NoiseModel& noise,
                                                   int embedding_dim, std::uint64_t seed);

/// Decomposes each sequence for each k; `detections[s]` holds the per-frame
/// detections of sequence s at its original rate.
Benchmark build_benchmark(const std::vector<Sequence>& sequences,
                          const std::vector<std::vector<FrameDetections>>& detections, const std::vector<int>& k_set);

/// Same, with detections drawn from the synthetic oracle.
Benchmark build_benchmark(const std::vector<Sequence>& sequences, const std::vector<int>& k_set,
                          const NoiseModel& noise, int embedding_dim, std::uint64_t seed);

/// `count` synthetic sequences named "<prefix>-NN".
std::vector<Sequence> make_synthetic_dataset(const SceneConfig& scene, int count, std::uint64_t seed,
                                             const std::string& prefix);

/// Tracks every video of the benchmark; results are in video order.
/// Patterns are only kept when `keep_patterns` is set.
std::vector<TrackingOutput> track_benchmark(const Benchmark& benchmark, const AssociationModel& model,
                                            const TrackerConfig& config, int jobs, bool keep_patterns = false);

struct BenchmarkEvaluation {
    std::vector<EvalResult> per_sequence;  // one row per (sequence, k)
    std::vector<EvalResult> per_k;         // pooled over sequences and offsets
    AggregateResult aggregate;
};

/// Scores tracker results (one per benchmark video, in video order).
BenchmarkEvaluation evaluate_benchmark(const Benchmark& benchmark, const std::vector<TrackResult>& results,
                                       int jobs, double iou_threshold = 0.5);

/// track_benchmark followed by evaluate_benchmark.
BenchmarkEvaluation run_benchmark(const Benchmark& benchmark, const AssociationModel& model,
                                  const TrackerConfig& config, int jobs);

}  // namespace framot
