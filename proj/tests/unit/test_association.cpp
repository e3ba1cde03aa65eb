#include "doctest.h"

#include <cmath>

#include "framot/association.hpp"
#include "framot/error.hpp"

using namespace framot;

namespace {

Embedding unit(int dim, int axis) {
    Embedding e = Embedding::Zero(dim);
    e[axis] = 1.0;
    return e;
}

TrackingPattern make_pattern(BoundingBox loc, BoxOffset pred, int axis, int level, int oracle) {
    TrackingPattern p;
    p.loc = loc;
    p.pred = pred;
    p.appearance = unit(4, axis);
    p.level = level;
    p.oracle_id = oracle;
    return p;
}

}  // namespace

TEST_CASE("iou") {
    CHECK(iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0);
    CHECK(iou({0, 0, 2, 2}, {5, 5, 2, 2}) == 0.0);
    CHECK(iou({0, 0, 2, 2}, {1, 1, 2, 2}) == doctest::Approx(1.0 / 7.0));
    CHECK(iou({0, 0, 2, 2}, {2, 0, 2, 2}) == 0.0);
    CHECK(iou({0, 0, 3, 1}, {1, 0, 3, 2}) == iou({1, 0, 3, 2}, {0, 0, 3, 1}));
}

TEST_CASE("normalized distance") {
    CHECK(normalized_distance({1, 1, 2, 2}, {1, 1, 2, 2}, 100, 50) == 0.0);
    const auto a = BoundingBox::from_center(0, 0, 2, 2);
    const auto b = BoundingBox::from_center(100, 50, 2, 2);
    CHECK(normalized_distance(a, b, 100, 50) == doctest::Approx(std::sqrt(2.0)));
    const auto c = BoundingBox::from_center(30, 20, 4, 4);
    CHECK(normalized_distance(a, c, 100, 50) == doctest::Approx(0.5));
    CHECK(normalized_distance(c, a, 100, 50) == normalized_distance(a, c, 100, 50));
}

TEST_CASE("cosine similarity") {
    CHECK(cosine_similarity(unit(3, 0), unit(3, 0)) == doctest::Approx(1.0));
    CHECK(cosine_similarity(unit(3, 0), unit(3, 1)) == doctest::Approx(0.0));
    CHECK(cosine_similarity(unit(3, 0), -unit(3, 0)) == doctest::Approx(-1.0));
}

TEST_CASE("match_and_fuse") {
    const std::vector<TrackingPattern> patterns{
        make_pattern({0, 0, 10, 10}, {1, 2, 0, 0}, 0, 2, 5),
        make_pattern({100, 100, 10, 10}, {-1, 0, 0, 0}, 1, 1, 6),
    };
    FrameDetections dets;
    dets.push_back({{0.5, 0, 10, 10}, 0.9}, unit(4, 2), 5);    // IoU ~0.9 with pattern 0
    dets.push_back({{103, 100, 10, 10}, 0.9}, unit(4, 3), 6);  // IoU ~0.54 with pattern 1
    dets.push_back({{500, 500, 10, 10}, 0.9}, unit(4, 3), 0);  // no overlap
    const FusedSet f = match_and_fuse(dets, patterns, 0.7);
    REQUIRE(f.size() == 2);
    CHECK(f.entries[0].source == FusedSource::detection);
    CHECK(f.entries[0].box == BoundingBox{1.5, 2, 10, 10});
    CHECK(f.entries[0].appearance == unit(4, 2));
    CHECK(f.entries[0].level == 2);
    CHECK(f.entries[0].oracle_id == 5);
    CHECK(f.entries[1].source == FusedSource::pattern);
    CHECK(f.entries[1].box == BoundingBox{99, 100, 10, 10});
    CHECK(f.entries[1].appearance == unit(4, 1));
    CHECK(f.entries[1].oracle_id == 6);

    CHECK(match_and_fuse(dets, {}, 0.7).size() == 0);
}

TEST_CASE("match_and_fuse is one-to-one and conserves patterns") {
    const std::vector<TrackingPattern> patterns{make_pattern({0, 0, 10, 10}, {}, 0, 1, 1)};
    FrameDetections dets;
    dets.push_back({{0.2, 0, 10, 10}, 0.9}, unit(4, 1), 1);
    dets.push_back({{0.1, 0, 10, 10}, 0.9}, unit(4, 2), 2);
    const FusedSet f = match_and_fuse(dets, patterns, 0.7);
    REQUIRE(f.size() == 1);
    // The detection with the larger IoU claims the pattern.
    CHECK(f.entries[0].appearance == unit(4, 2));
    CHECK(f.entries[0].oracle_id == 2);
}

TEST_CASE("affinity_train features and labels") {
    FusedSet fused;
    fused.entries.push_back({{0, 0, 10, 10}, unit(4, 0), 2, 5, FusedSource::detection, 1});
    fused.entries.push_back({{50, 50, 10, 10}, unit(4, 1), 1, kFalseIdentity, FusedSource::detection, 2});
    FrameDetections next;
    next.push_back({{0, 0, 10, 10}, 0.9}, unit(4, 0), 5);
    next.push_back({{50, 50, 10, 10}, 0.9}, unit(4, 1), kFalseIdentity);
    next.push_back({{20, 0, 10, 10}, 0.9}, unit(4, 2), 7);
    const auto t = affinity_train(fused, next, 100, 100);
    CHECK(t.features.rows == 2);
    CHECK(t.features.cols == 3);
    const auto z = t.features.at(0, 0);
    CHECK(z.norm_dist == 0.0);
    CHECK(z.iou == 1.0);
    CHECK(z.cos_sim == doctest::Approx(1.0));
    CHECK(z.level == 1.0);
    CHECK(t.labels.label(0, 0) == 1.0);
    CHECK(t.labels.mask(0, 0) == 1.0);
    CHECK(t.labels.label(0, 2) == 0.0);
    CHECK(t.labels.mask(0, 2) == 1.0);
    CHECK(t.labels.label(0, 1) == 0.0);  // true vs false
    CHECK(t.labels.mask(0, 1) == 1.0);
    CHECK(t.labels.mask(1, 1) == 0.0);  // false vs false
    CHECK(t.features.at(1, 0).level == 0.0);
}

TEST_CASE("affinity_infer") {
    const std::vector<TrackingPattern> patterns{make_pattern({10, 10, 10, 10}, {5, 0, 0, 0}, 0, 2, 1)};
    const std::vector<Detection> dets{{{15, 10, 10, 10}, 0.9}};
    const auto z = affinity_infer(patterns, dets, {unit(4, 0)}, 100, 100);
    CHECK(z.rows == 1);
    const auto f = z.at(0, 0);
    CHECK(f.norm_dist == 0.0);
    CHECK(f.iou == 1.0);
    CHECK(f.cos_sim == doctest::Approx(1.0));
    CHECK(f.level == 1.0);
    const auto empty = affinity_infer({}, dets, {unit(4, 0)}, 100, 100);
    CHECK(empty.rows == 0);
    CHECK(empty.cols == 1);
}

TEST_CASE("training and inference features agree on a matched fixture") {
    std::vector<TrackingPattern> patterns;
    FrameDetections current, next;
    for (int i = 0; i < 4; ++i) {
        const BoundingBox b{20.0 * i, 10.0 * i, 15, 30};
        patterns.push_back(make_pattern(b, {}, i, 1 + i % 2, i + 1));
        current.push_back({b, 0.9}, unit(4, i), i + 1);
        next.push_back({{20.0 * i + 3, 10.0 * i + 1, 15, 30}, 0.8}, normalized(unit(4, i) + 0.3 * unit(4, (i + 1) % 4)), i + 1);
    }
    const FusedSet fused = match_and_fuse(current, patterns, 0.7);
    REQUIRE(fused.size() == 4);
    const auto train = affinity_train(fused, next, 640, 480);
    const auto infer = affinity_infer(patterns, next.detections, next.embeddings, 640, 480);
    CHECK((train.features.features - infer.features).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fuse_raw") {
    FrameDetections d;
    d.push_back({{0, 0, 5, 5}, 0.9}, unit(4, 0), 3);
    d.push_back({{9, 0, 5, 5}, 0.2}, unit(4, 1), 0);
    const auto f = fuse_raw(d);
    REQUIRE(f.size() == 2);
    CHECK(f.entries[1].level == 1);
    CHECK(f.entries[0].oracle_id == 3);
}

TEST_CASE("affinity matrix feature ranges") {
    FusedSet fused;
    fused.entries.push_back({{0, 0, 10, 10}, unit(4, 0), 1, 1, FusedSource::detection, 1});
    FrameDetections next;
    next.push_back({{1900, 1000, 10, 10}, 0.9}, -unit(4, 0), 2);
    const auto z = affinity_train(fused, next, 1920, 1080).features.at(0, 0);
    CHECK(z.norm_dist <= std::sqrt(2.0));
    CHECK(z.iou == 0.0);
    CHECK(z.cos_sim == doctest::Approx(-1.0));
}
