#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "framot/error.hpp"
#include "framot/faam.hpp"
#include "framot/mot_io.hpp"
#include "oracles.hpp"

using namespace framot;

namespace {

FrameDetections random_frame(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> x(0, 1800), y(0, 950);
    FrameDetections f;
    for (int i = 0; i < n; ++i) {
        Embedding e = Embedding::Random(8);
        f.push_back({{x(rng), y(rng), 40, 100}, 0.9}, normalized(e), i + 1);
    }
    return f;
}

}  // namespace

TEST_CASE("encode_known") {
    const auto s = encode_known(2.0, 1.0, 4);
    REQUIRE(s.values.size() == 4);
    CHECK(s.values[0] == 1.0);
    CHECK(s.values[1] == doctest::Approx(std::cos(0.5)));
    CHECK(s.values[2] == doctest::Approx(std::cos(1.0)));
    CHECK(s.values[3] == doctest::Approx(std::cos(1.5)));
    CHECK(encode_known(17.3).values[0] == 1.0);
    CHECK(encode_known(25.0).values.size() == kDefaultEmbeddingLength);
    CHECK((encode_known(25.0).values - encode_known(1.0).values).norm() > 0.1);
    CHECK_THROWS_AS(encode_known(0.0), ValidationError);
    CHECK_THROWS_AS(encode_known(-3.0), ValidationError);
}

TEST_CASE("interpolate_sorted") {
    const auto c = interpolate_sorted({0.3}, 4);
    for (int i = 0; i < 4; ++i) CHECK(c[i] == doctest::Approx(0.3));
    const auto l = interpolate_sorted({0.1, 0.4}, 3);
    CHECK(l[0] == doctest::Approx(0.1));
    CHECK(l[1] == doctest::Approx(0.25));
    CHECK(l[2] == doctest::Approx(0.4));
    const auto e = interpolate_sorted({}, 5);
    for (int i = 0; i < 5; ++i) CHECK(e[i] == 1.0);
}

TEST_CASE("encode_ibdv properties") {
    std::mt19937_64 rng(3);
    const auto a = random_frame(rng, 7);
    for (auto crit : {IbdvCriterion::dist, IbdvCriterion::sim, IbdvCriterion::random}) {
        const auto same = encode_ibdv(a, a, crit == IbdvCriterion::random ? IbdvCriterion::dist : crit, 32, 1920, 1080);
        CHECK(same.values.cwiseAbs().maxCoeff() == 0.0);
        CHECK(same.source == RateSource::ibdv);
    }
    for (int n = 1; n <= 50; ++n) {
        const auto p = random_frame(rng, n);
        const auto q = random_frame(rng, (n * 7) % 13 + 1);
        const auto s = encode_ibdv(p, q, IbdvCriterion::dist, 128, 1920, 1080);
        REQUIRE(s.values.size() == 128);
        for (int i = 1; i < 128; ++i) CHECK(s.values[i] >= s.values[i - 1]);
        CHECK(s.values.minCoeff() >= 0.0);
        CHECK(s.values.maxCoeff() <= std::sqrt(2.0));
    }
    FrameDetections empty;
    CHECK(encode_ibdv(empty, a, IbdvCriterion::dist, 6, 1920, 1080).values == Eigen::VectorXd::Ones(6));
}

TEST_CASE("encode_ibdv single pair extends as a constant") {
    FrameDetections p, q;
    p.push_back({BoundingBox::from_center(0, 0, 10, 10), 0.9}, Embedding::Unit(4, 0), 1);
    q.push_back({BoundingBox::from_center(30, 40, 10, 10), 0.9}, Embedding::Unit(4, 0), 1);
    const auto s = encode_ibdv(p, q, IbdvCriterion::dist, 4, 100, 100);
    for (int i = 0; i < 4; ++i) CHECK(s.values[i] == doctest::Approx(0.5));
}

TEST_CASE("encode_ibdv is permutation invariant") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_frame(rng, 6);
        const auto q = random_frame(rng, 5);
        for (auto crit : {IbdvCriterion::dist, IbdvCriterion::sim}) {
            const auto base = encode_ibdv(p, q, crit, 64, 1920, 1080);
            FrameDetections pp, qq;
            std::vector<int> order{5, 2, 0, 4, 1, 3};
            for (int i : order) pp.push_back(p.detections[i], p.embeddings[i], p.oracle_ids[i]);
            for (int i = 4; i >= 0; --i) qq.push_back(q.detections[i], q.embeddings[i], q.oracle_ids[i]);
            CHECK((encode_ibdv(pp, qq, crit, 64, 1920, 1080).values - base.values).norm() < 1e-12);
        }
    }
}

TEST_CASE("ibdv random criterion is seeded") {
    std::mt19937_64 rng(9);
    const auto p = random_frame(rng, 8);
    const auto q = random_frame(rng, 8);
    CHECK(encode_ibdv(p, q, IbdvCriterion::random, 16, 1920, 1080, 4).values ==
          encode_ibdv(p, q, IbdvCriterion::random, 16, 1920, 1080, 4).values);
    CHECK(parse_ibdv_criterion("sim") == IbdvCriterion::sim);
    CHECK(std::string(to_string(IbdvCriterion::random)) == "random");
    CHECK_THROWS_AS(parse_ibdv_criterion("nope"), ValidationError);
}

TEST_CASE("network shapes") {
    const auto p = FaamParams::init(FaamShape{}, 1);
    REQUIRE(p.affinity.size() == 4);
    REQUIRE(p.attention.size() == 3);
    CHECK(p.affinity[0].weight.cols() == 4);
    CHECK(p.affinity[3].weight.rows() == 64);
    CHECK(p.attention[0].weight.cols() == 128);
    CHECK(p.attention[0].weight.rows() == 96);
    CHECK(p.attention[1].weight.rows() == 80);
    CHECK(p.attention[2].weight.rows() == 64);
    const double bound = std::sqrt(6.0 / (4 + 64));
    CHECK(p.affinity[0].weight.cwiseAbs().maxCoeff() <= bound);
    CHECK(p.affinity[0].bias.isZero());
    CHECK(p.flatten().size() == p.parameter_count());
    FaamParams q = p.zeros_like();
    q.assign(p.flatten());
    CHECK(q == p);
    CHECK(FaamParams::init(FaamShape{}, 1) == p);
    CHECK(!(FaamParams::init(FaamShape{}, 2) == p));
}

TEST_CASE("forward basics") {
    std::mt19937_64 rng(1);
    auto [z, labels] = oracle::random_affinity(rng, 3, 4);
    const auto sigma = encode_known(12.5);
    FaamParams p = FaamParams::init(FaamShape{}, 7);
    const auto out = faam_forward(z, sigma, p);
    CHECK(out.scores.rows() == 3);
    CHECK(out.scores.cols() == 4);
    CHECK(out.attention.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.scores.minCoeff() > 0.0);
    CHECK(out.scores.maxCoeff() < 1.0);
    CHECK((faam_scores(z, sigma, p) - out.scores).cwiseAbs().maxCoeff() < 1e-12);

    // Constant attention logits: uniform weights, raw = mean(f_aff).
    FaamParams flat = p;
    flat.attention.back().weight.setZero();
    flat.attention.back().bias.setConstant(0.3);
    const auto f = faam_forward(z, sigma, flat);
    CHECK((f.attention.array() - 1.0 / 64).abs().maxCoeff() < 1e-12);
    for (Eigen::Index k = 0; k < z.pairs(); ++k) {
        CHECK(f.raw[k] == doctest::Approx(f.affinity_act.back().col(k).mean()).epsilon(1e-12));
    }

    FaamParams zero = p;
    for (auto& l : zero.affinity) {
        l.weight.setZero();
        l.bias.setZero();
    }
    CHECK((faam_scores(z, sigma, zero).array() - 0.5).abs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(faam_forward(z, encode_known(1.0, 6.0, 64), p), ValidationError);
}

TEST_CASE("loss values") {
    FaamParams p = FaamParams::init(FaamShape{}, 3);
    for (auto& l : p.affinity) {
        l.weight.setZero();
        l.bias.setZero();
    }
    AffinityMatrix z(1, 1);
    z.set(0, 0, {0.1, 0.5, 0.2, 0});
    PairLabels labels{Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    const auto lg = faam_loss_and_gradient(z, encode_known(25), labels, p, 2.0);
    CHECK(lg.loss == doctest::Approx(2.0 * std::log(2.0)));
    labels.mask.setZero();
    FaamParams before = p;
    CHECK(train_step(z, encode_known(25), labels, p, 0.1, 1.0) == 0.0);
    CHECK(p == before);
}

TEST_CASE("loss near zero when scores match labels") {
    FaamParams p = FaamParams::init(FaamShape{}, 3);
    for (auto& l : p.affinity) {
        l.weight.setZero();
        l.bias.setZero();
    }
    p.affinity.back().bias.setConstant(40.0);  // raw = 40, score ~ 1
    AffinityMatrix z(1, 2);
    z.set(0, 0, {0, 1, 1, 0});
    z.set(0, 1, {0, 1, 1, 0});
    PairLabels labels{Eigen::MatrixXd::Ones(1, 2), Eigen::MatrixXd::Ones(1, 2)};
    const auto lg = faam_loss_and_gradient(z, encode_known(25), labels, p, 1.0);
    CHECK(lg.loss < 1e-15);
    double g = 0.0;
    for (double v : lg.gradient.flatten()) g = std::max(g, std::abs(v));
    CHECK(g < 1e-15);
}

TEST_CASE("analytic gradient matches finite differences") {
    std::mt19937_64 rng(11);
    auto [z, labels] = oracle::random_affinity(rng, 4, 5);
    const FaamParams p = FaamParams::init(FaamShape{}, 5);
    const auto known = encode_known(25.0 / 8);
    const auto a = random_frame(rng, 6);
    const auto b = random_frame(rng, 6);
    const auto ibdv = encode_ibdv(a, b, IbdvCriterion::dist, 128, 1920, 1080);
    CHECK(oracle::gradient_check(z, known, labels, p, 1.0, 50, 1) < 1e-4);
    CHECK(oracle::gradient_check(z, ibdv, labels, p, 1.0, 50, 2) < 1e-4);
    CHECK(oracle::gradient_check(z, known, labels, p, 0.5, 50, 3) < 1e-4);
}

TEST_CASE("training reduces the loss on a fixed batch") {
    std::mt19937_64 rng(4);
    auto [z, labels] = oracle::random_affinity(rng, 5, 5);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) labels.label(i, j) = z.at(i, j).iou > 0.5 ? 1.0 : 0.0;
    }
    FaamParams p = FaamParams::init(FaamShape{}, 9);
    const auto sigma = encode_known(5.0);
    const double first = train_step(z, sigma, labels, p, 0.1, 1.0);
    double last = first;
    for (int s = 0; s < 1500; ++s) last = train_step(z, sigma, labels, p, 0.1, 1.0);
    CHECK(last < 0.5 * first);
    FaamParams q = FaamParams::init(FaamShape{}, 9);
    for (int s = 0; s < 1501; ++s) train_step(z, sigma, labels, q, 0.1, 1.0);
    CHECK(q == p);
}

TEST_CASE("trivial score") {
    AffinityMatrix z(1, 3);
    z.set(0, 0, {0.2, 1, 1, 1});
    z.set(0, 1, {0.9, 0, -1, 0});
    z.set(0, 2, {0.0, 0.5, 0, 0});
    const auto s = trivial_score(z);
    CHECK(s(0, 0) == doctest::Approx(1.0));
    CHECK(s(0, 1) == doctest::Approx(0.0));
    CHECK(s(0, 2) == doctest::Approx(0.5));
    for (double cs : {-1.0, 0.0, 0.7}) {
        double prev = -1.0;
        for (double i = 0.0; i <= 1.0; i += 0.1) {
            AffinityMatrix m(1, 1);
            m.set(0, 0, {0.1, i, cs, 0});
            const double v = trivial_score(m)(0, 0);
            CHECK(v >= prev);
            prev = v;
        }
    }
    CHECK(score_pairs(TrivialAssociation{}, z, encode_blind())(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("checkpoint round trip") {
    const auto path = std::filesystem::temp_directory_path() / "framot_test.faam";
    const FaamParams p = FaamParams::init(FaamShape{}, 12);
    save_checkpoint(path, p);
    CHECK(load_checkpoint(path) == p);
    const std::string bytes = read_file(path);
    CHECK(bytes.substr(0, 8) == "FAAM0001");
    write_file(path, bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS(load_checkpoint(path));
    write_file(path, "garbage!");
    CHECK_THROWS(load_checkpoint(path));
    std::filesystem::remove(path);
}
