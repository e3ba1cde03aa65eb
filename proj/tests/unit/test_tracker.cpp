#include "doctest.h"

#include <map>
#include <set>

#include "framot/benchmark.hpp"
#include "framot/error.hpp"
#include "framot/metrics.hpp"
#include "framot/tracker.hpp"

using namespace framot;

namespace {

Embedding axis(int dim, int i) { return Embedding::Unit(dim, i); }

FrameDetections frame_of(std::initializer_list<std::tuple<BoundingBox, double, int>> items) {
    FrameDetections f;
    for (const auto& [b, c, id] : items) f.push_back({b, c}, axis(8, id % 8), id);
    return f;
}

}  // namespace

TEST_CASE("config and modes") {
    CHECK(parse_frame_rate_mode("known") == FrameRateMode::known);
    CHECK(parse_frame_rate_mode("unknown") == FrameRateMode::unknown);
    CHECK(parse_frame_rate_mode("blind") == FrameRateMode::blind);
    CHECK(std::string(to_string(FrameRateMode::unknown)) == "unknown");
    CHECK_THROWS_AS(parse_frame_rate_mode("fast"), ValidationError);
    TrackerConfig c;
    CHECK(c.low_threshold == 0.1);
    CHECK(c.high_threshold == 0.6);
    CHECK(c.max_missing == 30);
    CHECK(c.score_gate == 0.1);
    CHECK_NOTHROW(c.validate());
    c.low_threshold = 0.7;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("gated assignment") {
    Eigen::MatrixXd s(1, 1);
    s << 0.9;
    CHECK(gated_assignment(s, 0.1).matches.size() == 1);
    s << 0.1;
    const auto r = gated_assignment(s, 0.1);
    CHECK(r.matches.empty());
    CHECK(r.unmatched_trajectories == std::vector<int>{0});
    CHECK(r.unmatched_detections == std::vector<int>{0});
    const auto e = gated_assignment(Eigen::MatrixXd(2, 0), 0.1);
    CHECK(e.unmatched_trajectories == std::vector<int>{0, 1});
    Eigen::MatrixXd m(2, 2);
    m << 0.9, 0.8, 0.85, 0.2;
    const auto best = gated_assignment(m, 0.1);
    CHECK(best.matches == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}});
}

TEST_CASE("stage_match with no detections leaves every trajectory") {
    TrackingPattern p;
    p.loc = {0, 0, 10, 10};
    p.appearance = axis(8, 0);
    const auto r = stage_match({p, p}, {}, {}, TrivialAssociation{}, encode_blind(), 0.1, 100, 100);
    CHECK(r.matches.empty());
    CHECK(r.unmatched_trajectories.size() == 2);
}

TEST_CASE("low-confidence detections are ignored and never start tracks") {
    Tracker t(TrivialAssociation{}, TrackerConfig{}, 25, 1920, 1080);
    auto out = t.step(frame_of({{{10, 10, 20, 40}, 0.05, 1}, {{300, 10, 20, 40}, 0.3, 2}}));
    CHECK(out.empty());
    CHECK(t.trajectories().empty());
    out = t.step(frame_of({{{10, 10, 20, 40}, 0.9, 1}}));
    CHECK(out.size() == 1);
}

TEST_CASE("low-confidence detections continue tracks in stage 2") {
    Tracker t(TrivialAssociation{}, TrackerConfig{}, 25, 1920, 1080);
    t.step(frame_of({{{10, 10, 20, 40}, 0.9, 1}}));
    const auto out = t.step(frame_of({{{11, 10, 20, 40}, 0.3, 1}}));
    REQUIRE(out.size() == 1);
    CHECK(out[0].identity == 1);
    CHECK(t.trajectories()[0].level == 2);
    const auto low = t.step(frame_of({{{11, 10, 20, 40}, 0.05, 1}}));
    CHECK(low.empty());
    CHECK(t.trajectories()[0].missing_count == 1);
}

TEST_CASE("trajectories are dropped after max_missing frames") {
    Tracker t(TrivialAssociation{}, TrackerConfig{}, 25, 1920, 1080);
    t.step(frame_of({{{10, 10, 20, 40}, 0.9, 1}}));
    for (int f = 2; f <= 31; ++f) {
        t.step(FrameDetections{});
        CHECK(t.patterns().size() == 1);
    }
    t.step(FrameDetections{});  // 31st consecutive miss
    CHECK(t.patterns().empty());
}

TEST_CASE("zero-noise tracking is perfect") {
    SceneConfig scene;
    scene.length = 300;
    const auto seqs = make_synthetic_dataset(scene, 2, 17, "t");
    for (const auto& s : seqs) {
        const auto dets = synthesize_detections(s, NoiseModel::zero(), 32, 5);
        const auto out = track_sequence(dets, TrivialAssociation{}, TrackerConfig{}, s.fps, s.width, s.height);
        const auto counts = evaluate(series_from_gt(s), series_from_result(out.result, s.length));
        CHECK(counts.clear.mota() == 1.0);
        CHECK(counts.clear.idsw == 0);
        CHECK(counts.id.idf1() == 1.0);
        // Every gt box of frame t > 1 has exactly one pattern; the others
        // belong to coasting tracks of objects that left the scene.
        const auto by_frame = s.gt_by_frame();
        for (int f = 2; f <= s.length; ++f) {
            std::map<int, int> count;
            for (const auto& p : out.patterns[static_cast<std::size_t>(f - 1)]) ++count[p.oracle_id];
            for (const auto& e : by_frame[static_cast<std::size_t>(f - 1)]) CHECK(count[e.identity] == 1);
        }
    }
}

TEST_CASE("tracker invariants on noisy input") {
    SceneConfig scene;
    scene.length = 200;
    const auto s = make_synthetic_dataset(scene, 1, 3, "n")[0];
    const auto dets = synthesize_detections(s, NoiseModel{}, 32, 9);
    for (auto mode : {FrameRateMode::known, FrameRateMode::unknown, FrameRateMode::blind}) {
        TrackerConfig c;
        c.frame_rate_mode = mode;
        const FaamParams p = FaamParams::init(FaamShape{}, 2);
        Tracker t(p, c, 25, s.width, s.height);
        std::set<int> all_ids;
        for (const auto& f : dets) {
            const auto out = t.step(f);
            std::set<int> ids;
            for (const auto& b : out) {
                CHECK(ids.insert(b.identity).second);
                all_ids.insert(b.identity);
            }
            for (const auto& p : t.patterns()) {
                CHECK(std::abs(p.appearance.norm() - 1.0) < 1e-9);
                CHECK((p.level == 1 || p.level == 2));
            }
            CHECK(t.last_sigma().values.size() == c.embedding_length);
        }
    }
}

TEST_CASE("known and unknown sigma") {
    TrackerConfig c;
    c.frame_rate_mode = FrameRateMode::unknown;
    Tracker t(FaamParams::init(FaamShape{}, 1), c, 5, 1920, 1080);
    t.step(frame_of({{{10, 10, 20, 40}, 0.9, 1}}));
    CHECK(t.last_sigma().values == Eigen::VectorXd::Ones(128));
    t.step(frame_of({{{10, 10, 20, 40}, 0.9, 1}}));
    CHECK(t.last_sigma().values.isZero());
    c.frame_rate_mode = FrameRateMode::known;
    Tracker k(FaamParams::init(FaamShape{}, 1), c, 5, 1920, 1080);
    k.step(FrameDetections{});
    CHECK((k.last_sigma().values - encode_known(5).values).norm() < 1e-12);
}

TEST_CASE("tracking is deterministic") {
    SceneConfig scene;
    scene.length = 120;
    const auto s = make_synthetic_dataset(scene, 1, 8, "d")[0];
    const auto dets = synthesize_detections(s, NoiseModel{}, 32, 1);
    const auto a = track_sequence(dets, TrivialAssociation{}, TrackerConfig{}, 25, s.width, s.height);
    const auto b = track_sequence(dets, TrivialAssociation{}, TrackerConfig{}, 25, s.width, s.height);
    CHECK(a.result == b.result);
}
