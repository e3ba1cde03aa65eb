#include "doctest.h"

#include <random>

#include "framot/error.hpp"
#include "framot/metrics.hpp"
#include "framot/synth_detector.hpp"
#include "oracles.hpp"

using namespace framot;

namespace {

FrameSeries series(std::initializer_list<std::initializer_list<std::pair<int, BoundingBox>>> frames) {
    FrameSeries out;
    for (const auto& f : frames) {
        FrameBoxes b;
        for (const auto& [id, box] : f) {
            b.ids.push_back(id);
            b.boxes.push_back(box);
        }
        out.push_back(b);
    }
    return out;
}

const BoundingBox A{0, 0, 10, 10};
const BoundingBox B{100, 0, 10, 10};

}  // namespace

TEST_CASE("perfect prediction") {
    const auto gt = series({{{1, A}, {2, B}}, {{1, A}, {2, B}}, {{1, A}}});
    const auto c = evaluate(gt, gt);
    CHECK(c.clear.mota() == 1.0);
    CHECK(c.clear.fp == 0);
    CHECK(c.clear.fn == 0);
    CHECK(c.clear.idsw == 0);
    CHECK(c.id.idf1() == 1.0);
    CHECK(c.hota.hota() == doctest::Approx(1.0));
}

TEST_CASE("mota arithmetic") {
    ClearCounts c{10, 8, 1, 2, 1};
    CHECK(c.mota() == doctest::Approx(0.6));
    CHECK_THROWS_AS(ClearCounts{}.mota(), ValidationError);
}

TEST_CASE("hand-made id swap") {
    // Two objects, predictions swap labels in frame 3.
    const auto gt = series({{{1, A}, {2, B}}, {{1, A}, {2, B}}, {{1, A}, {2, B}}});
    const auto pred = series({{{7, A}, {8, B}}, {{7, A}, {8, B}}, {{8, A}, {7, B}}});
    const auto c = clear_mot(gt, pred);
    CHECK(c.idsw == 2);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
    CHECK(c.mota() == doctest::Approx(1.0 - 2.0 / 6.0));
    const auto ref = oracle::clear(gt, pred, 0.5);
    CHECK(ref.idsw == c.idsw);
    CHECK(ref.fp == c.fp);
    const auto id = id_metrics(gt, pred);
    CHECK(id.idtp == 4);
    CHECK(id.idf1() == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("single false positive costs 1/GT") {
    const auto gt = series({{{1, A}}, {{1, A}}, {{1, A}, {2, B}}, {{2, B}}});
    auto pred = gt;
    pred[1].ids.push_back(9);
    pred[1].boxes.push_back({500, 500, 10, 10});
    CHECK(clear_mot(gt, pred).mota() == doctest::Approx(1.0 - 1.0 / 5.0));
}

TEST_CASE("idf1 with half coverage") {
    FrameSeries gt, pred;
    for (int t = 0; t < 8; ++t) {
        gt.push_back({{1, 2}, {A, B}});
        pred.push_back(t < 4 ? FrameBoxes{{5, 6}, {A, B}} : FrameBoxes{});
    }
    CHECK(id_metrics(gt, pred).idf1() == doctest::Approx(2.0 / 3.0));
    CHECK(id_metrics({}, {}).idf1() == 1.0);
}

TEST_CASE("hota split trajectory") {
    FrameSeries gt, pred;
    for (int t = 0; t < 6; ++t) {
        gt.push_back({{1}, {A}});
        pred.push_back({{t < 3 ? 1 : 2}, {A}});
    }
    const auto h = hota(gt, pred);
    for (int a = 0; a < kHotaAlphaCount; ++a) {
        CHECK(h.det_a(a) == doctest::Approx(1.0));
        CHECK(h.ass_a(a) == doctest::Approx(0.5));
    }
    CHECK(h.hota() == doctest::Approx(std::sqrt(0.5)));
    CHECK(hota({}, {}).hota() == 1.0);
}

TEST_CASE("hota alpha grid") {
    CHECK(hota_alpha(0) == doctest::Approx(0.05));
    CHECK(hota_alpha(18) == doctest::Approx(0.95));
}

TEST_CASE("metrics match brute-force oracles") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const auto [gt, pred] = oracle::random_case(rng, 4, 5);
        const auto c = clear_mot(gt, pred);
        const auto rc = oracle::clear(gt, pred, 0.5);
        CHECK(c.fp == rc.fp);
        CHECK(c.fn == rc.fn);
        CHECK(c.idsw == rc.idsw);
        CHECK(c.matches == rc.matches);
        const auto id = id_metrics(gt, pred);
        const auto ri = oracle::identity(gt, pred, 0.5);
        CHECK(id.idtp == ri.idtp);
        CHECK(id.idfp == ri.idfp);
        CHECK(id.idfn == ri.idfn);
        const auto h = hota(gt, pred);
        const auto rh = oracle::hota(gt, pred);
        CHECK(std::abs(h.hota() - rh.mean_hota) < 1e-9);
        CHECK(std::abs(h.det_a() - rh.mean_det_a) < 1e-9);
        CHECK(std::abs(h.ass_a() - rh.mean_ass_a) < 1e-9);
        CHECK(h.hota() >= 0.0);
        CHECK(h.hota() <= 1.0);
        CHECK(id.idf1() >= 0.0);
        CHECK(id.idf1() <= 1.0);
    }
}

TEST_CASE("aggregate") {
    std::vector<EvalResult> rows(3);
    for (int i = 0; i < 3; ++i) {
        rows[i].k = i + 1;
        rows[i].hota = 0.7;
        rows[i].mota = 0.5;
        rows[i].idf1 = 0.6;
    }
    auto a = aggregate(rows);
    CHECK(a.mhota == doctest::Approx(0.7));
    CHECK(a.vr == doctest::Approx(0.0));
    rows.resize(2);
    rows[0].hota = 0.8;
    rows[1].hota = 0.4;
    CHECK(aggregate(rows).vr == doctest::Approx(0.5));
    rows[0].hota = 0.655;
    rows[1].hota = 0.464;
    CHECK(aggregate(rows).vr * 100 == doctest::Approx(29.2).epsilon(0.002));
    rows[0].hota = 0.655 * 0.3;
    rows[1].hota = 0.464 * 0.3;
    CHECK(aggregate(rows).vr * 100 == doctest::Approx(29.2).epsilon(0.002));
    CHECK_THROWS_AS(aggregate({}), ValidationError);
    rows[0].hota = rows[1].hota = 0.0;
    CHECK_THROWS_AS(aggregate(rows), ValidationError);
    const std::string json = aggregate(std::vector<EvalResult>(1, EvalResult{"all", 1, 1, 1, 1, 1, 1})).to_json();
    CHECK(json.find("\"mHOTA\"") != std::string::npos);
}

TEST_CASE("eval csv") {
    EvalResult r;
    r.sequence = "s";
    r.k = 4;
    r.hota = 0.5;
    const std::string csv = eval_csv({r});
    CHECK(csv.rfind("sequence,k,metric,value\n", 0) == 0);
    CHECK(csv.find("s,4,HOTA,0.5") != std::string::npos);
}

TEST_CASE("candidate curves") {
    Sequence single;
    single.length = 20;
    for (int f = 1; f <= 20; ++f) single.gt.push_back({f, 1, {3.0 * f, 10, 10, 10}, 1});
    for (const auto& row : candidate_curve(single, {1, 2, 4}, {1, 2, 4})) CHECK(row.mean_candidates == 1.0);
    CHECK_THROWS_AS(candidate_curve(single, {1}, {0.5}), ValidationError);

    SceneConfig scene;
    scene.length = 400;
    scene.concurrent = 30;
    const auto crowd = make_synthetic_sequence(scene, 4, "crowd");
    const std::vector<int> ks{1, 2, 4, 8, 16};
    const std::vector<double> rs{1, 2, 4, 8};
    const auto rows = candidate_curve(crowd, ks, rs);
    REQUIRE(rows.size() == ks.size() * rs.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
        for (std::size_t j = 1; j < rs.size(); ++j) {
            CHECK(rows[i * rs.size() + j].mean_candidates >= rows[i * rs.size() + j - 1].mean_candidates);
        }
    }
    for (std::size_t j = 0; j < rs.size(); ++j) {
        for (std::size_t i = 1; i < ks.size(); ++i) {
            CHECK(rows[i * rs.size() + j].mean_candidates >= rows[(i - 1) * rs.size() + j].mean_candidates);
        }
    }
    CHECK(candidate_csv(rows).rfind("k,r,mean_candidates", 0) == 0);
}

TEST_CASE("two static objects") {
    Sequence s;
    s.length = 2;
    s.width = 100;
    s.height = 100;
    s.gt = {{1, 1, BoundingBox::from_center(10, 10, 2, 2), 1}, {1, 2, BoundingBox::from_center(50, 10, 2, 2), 1},
            {2, 1, BoundingBox::from_center(12, 10, 2, 2), 1}, {2, 2, BoundingBox::from_center(50, 10, 2, 2), 1}};
    // Object 1 moved 2 px; object 2 sits 40 px from its old position.
    const auto rows = candidate_curve(s, {1}, {1, 10, 19, 21});
    CHECK(rows[0].mean_candidates == 1.0);
    CHECK(rows[1].mean_candidates == 1.0);
    CHECK(rows[2].mean_candidates == 1.0);
    CHECK(rows[3].mean_candidates == 2.0);
}
