#include "doctest.h"

#include <filesystem>
#include <map>
#include <random>

#include "framot/benchmark.hpp"
#include "framot/error.hpp"
#include "framot/pts.hpp"

using namespace framot;

namespace {

Benchmark small_benchmark(const NoiseModel& noise, std::vector<int> k_set = {1, 2, 4}) {
    SceneConfig scene;
    scene.length = 120;
    scene.concurrent = 8;
    const auto seqs = make_synthetic_dataset(scene, 2, 31, "p");
    return build_benchmark(seqs, k_set, noise, 16, 7);
}

}  // namespace

TEST_CASE("pattern store") {
    PatternStore s;
    CHECK(s.empty());
    TrackingPattern p;
    p.loc = {1, 2, 3, 4};
    p.pred = {0.5, 0, 0, 0};
    p.appearance = Embedding::Unit(4, 1);
    p.frame = 3;
    p.level = 2;
    p.trajectory_id = 9;
    p.oracle_id = 4;
    s.insert({"a", 2, 1, 3}, {p, p});
    CHECK_THROWS_AS(s.insert({"a", 2, 1, 4}, {p}), ValidationError);
    CHECK(s.frame_count() == 1);
    CHECK(s.pattern_count() == 2);
    REQUIRE(s.find({"a", 2, 1, 3}) != nullptr);
    CHECK(s.find({"a", 2, 2, 3}) == nullptr);
    const std::string bytes = s.serialize();
    CHECK(bytes.substr(0, 8) == "FRAPTS01");
    const PatternStore back = PatternStore::deserialize(bytes);
    CHECK(back == s);
    CHECK(back.find({"a", 2, 1, 3})->at(1).oracle_id == 4);
    CHECK_THROWS(PatternStore::deserialize(bytes.substr(0, bytes.size() - 1)));
    const auto path = std::filesystem::temp_directory_path() / "framot_test.pts";
    s.save(path);
    CHECK(PatternStore::load(path) == s);
    std::filesystem::remove(path);
}

TEST_CASE("generate_patterns on zero noise") {
    const Benchmark b = small_benchmark(NoiseModel::zero(), {1});
    const PatternStore store = generate_patterns(TrivialAssociation{}, b, TrackerConfig{}, 1);
    for (const auto& v : b.videos) {
        const auto by_frame = v.video.sequence.gt_by_frame();
        for (int f = 2; f <= v.video.sequence.length; ++f) {
            const auto* p = store.find({v.video.parent, v.video.k, v.video.offset, f});
            REQUIRE(p != nullptr);
            std::map<int, int> count;
            for (const auto& q : *p) ++count[q.oracle_id];
            for (const auto& e : by_frame[static_cast<std::size_t>(f - 1)]) CHECK(count[e.identity] == 1);
            CHECK(p->size() >= by_frame[static_cast<std::size_t>(f - 1)].size());
            for (const auto& q : *p) CHECK(std::abs(q.appearance.norm() - 1.0) < 1e-9);
        }
    }
    CHECK(generate_patterns(TrivialAssociation{}, Benchmark{}, TrackerConfig{}, 1).empty());
}

TEST_CASE("generate_patterns is independent of the worker count") {
    const Benchmark b = small_benchmark(NoiseModel{});
    CHECK(generate_patterns(TrivialAssociation{}, b, TrackerConfig{}, 1) ==
          generate_patterns(TrivialAssociation{}, b, TrackerConfig{}, 3));
}

TEST_CASE("configs validate") {
    TrainConfig t;
    CHECK_NOTHROW(t.validate());
    t.learning_rate = 0;
    CHECK_THROWS_AS(t.validate(), ValidationError);
    PtsConfig p;
    CHECK(p.periods == 3);
    CHECK(p.k_set == kDefaultKSet);
    p.periods = -1;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("pair sampling stays within the requested k") {
    const Benchmark b = small_benchmark(NoiseModel{});
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        const auto pair = sample_pair(b, {2, 4}, rng);
        REQUIRE(pair);
        const auto& v = b.videos[pair->video];
        CHECK((v.video.k == 2 || v.video.k == 4));
        CHECK(pair->frame >= 1);
        CHECK(pair->frame < v.video.sequence.length);
    }
    CHECK(!sample_pair(b, {100}, rng));
}

TEST_CASE("pair sigma follows the mode") {
    const Benchmark b = small_benchmark(NoiseModel{});
    const auto& v = b.videos.back();
    TrackerConfig c;
    c.frame_rate_mode = FrameRateMode::known;
    CHECK((pair_sigma(v, 1, v.detections[0], v.detections[1], c).values - encode_known(v.video.effective_fps).values)
              .norm() < 1e-12);
    c.frame_rate_mode = FrameRateMode::blind;
    CHECK(pair_sigma(v, 1, v.detections[0], v.detections[1], c).values.isZero());
    c.frame_rate_mode = FrameRateMode::unknown;
    CHECK(pair_sigma(v, 1, v.detections[0], v.detections[1], c).source == RateSource::ibdv);
}

TEST_CASE("run_pts edge cases") {
    const Benchmark b = small_benchmark(NoiseModel{});
    PtsConfig p;
    p.k_set = {1, 2, 4};
    p.periods = 0;
    TrainConfig t;
    t.steps_per_period = 10;
    t.seed = 4;
    const auto none = run_pts(p, b, t, TrackerConfig{}, FaamShape{}, 1);
    CHECK(none.params == FaamParams::init(FaamShape{}, 4));
    CHECK(none.periods.empty());

    p.periods = 1;
    t.steps_per_period = 0;
    int pattern_calls = 0;
    const auto idle = run_pts(p, b, t, TrackerConfig{}, FaamShape{}, 1, {},
                              [&](int, const PatternStore& s) { pattern_calls += s.empty() ? 0 : 1; });
    CHECK(idle.params == FaamParams::init(FaamShape{}, 4));
    CHECK(pattern_calls == 1);
    CHECK(idle.periods.at(0).pattern_count > 0);
}

TEST_CASE("run_pts trains and is reproducible") {
    const Benchmark b = small_benchmark(NoiseModel{});
    PtsConfig p;
    p.k_set = {1, 2, 4};
    p.periods = 2;
    p.seed = 3;
    TrainConfig t;
    t.steps_per_period = 150;
    t.learning_rate = 0.1;
    t.seed = 1;
    TrackerConfig c;
    c.frame_rate_mode = FrameRateMode::unknown;
    std::vector<PeriodLog> logs;
    const auto a = run_pts(p, b, t, c, FaamShape{}, 1, [&](const PeriodLog& l) { logs.push_back(l); });
    const auto again = run_pts(p, b, t, c, FaamShape{}, 2);
    CHECK(a.params == again.params);
    REQUIRE(logs.size() == 2);
    CHECK(logs[0].trained_steps > 100);
    CHECK(logs[0].losses.size() == static_cast<std::size_t>(logs[0].trained_steps));
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 30; ++i) {
        head += logs[0].losses[static_cast<std::size_t>(i)];
        tail += logs[0].losses[logs[0].losses.size() - 1 - static_cast<std::size_t>(i)];
    }
    CHECK(tail < head);
    const auto ma = logs[0].moving_average(10);
    CHECK(ma.size() == logs[0].losses.size() - 9);
    CHECK(logs[0].to_json().find("\"period\":1") != std::string::npos);
    CHECK(!(a.params == FaamParams::init(FaamShape{}, 1)));
}

TEST_CASE("raw pairs need no store") {
    const Benchmark b = small_benchmark(NoiseModel{});
    const auto s = pair_affinity(b, {0, 1}, nullptr, TrackerConfig{});
    REQUIRE(s);
    CHECK(s->features.rows == static_cast<Eigen::Index>(
                                  filter_by_confidence(b.videos[0].detections[0], 0.1).size()));
    PatternStore empty;
    CHECK(!pair_affinity(b, {0, 1}, &empty, TrackerConfig{}));
}

TEST_CASE("affinity scatter") {
    const Benchmark b = small_benchmark(NoiseModel{});
    const auto store = generate_patterns(TrivialAssociation{}, b, TrackerConfig{}, 1);
    const std::string raw = affinity_scatter(b, nullptr, {1, 2}, 5, 1, TrackerConfig{}, true);
    CHECK(raw.rfind("norm_dist,iou,cos_sim,level,label,pts_flag\n", 0) == 0);
    const std::string pts = affinity_scatter(b, &store, {1, 2}, 5, 1, TrackerConfig{}, false);
    CHECK(pts.find("norm_dist") == std::string::npos);
    CHECK(pts.find(",1\n") != std::string::npos);
    CHECK(raw.find(",0\n") != std::string::npos);
}
