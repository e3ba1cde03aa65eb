#include "framot/synth_detector.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "framot/error.hpp"
#include "framot/seeding.hpp"

namespace framot {

FrameDetections filter_by_confidence(const FrameDetections& frame, double threshold) {
    FrameDetections out;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        if (frame.detections[i].confidence >= threshold) {
            out.push_back(frame.detections[i], frame.embeddings[i], frame.oracle_ids[i]);
        }
    }
    return out;
}

void NoiseModel::validate() const {
    auto non_negative = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be >= 0");
    };
    non_negative(center_jitter, "center_jitter");
    non_negative(size_jitter, "size_jitter");
    non_negative(fp_rate, "fp_rate");
    non_negative(conf_true_std, "conf_true_std");
    non_negative(conf_false_std, "conf_false_std");
    non_negative(embed_noise, "embed_noise");
    non_negative(embed_drift, "embed_drift");
    if (drift_period < 1) throw ValidationError("drift_period must be >= 1");
    if (!(miss_prob >= 0.0 && miss_prob <= 1.0)) throw ValidationError("miss_prob must lie in [0, 1]");
    if (!(fp_min_width > 0.0 && fp_max_width >= fp_min_width && fp_aspect > 0.0)) {
        throw ValidationError("false-positive box size range is invalid");
    }
}

NoiseModel NoiseModel::zero() {
    NoiseModel m;
    m.center_jitter = 0.0;
    m.size_jitter = 0.0;
    m.miss_prob = 0.0;
    m.fp_rate = 0.0;
    m.conf_true_mean = 0.9;
    m.conf_true_std = 0.0;
    m.embed_noise = 0.0;
    m.embed_drift = 0.0;
    return m;
}

namespace {

Embedding random_unit(std::mt19937_64& rng, Eigen::Index dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Embedding v(dim);
    do {
        for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

double clamp_confidence(double c) { return std::clamp(c, kMinConfidence, kMaxConfidence); }

}  // namespace

IdentityBank make_identity_bank(const std::vector<int>& identities, int d_embed, std::uint64_t seed) {
    if (d_embed < 2) throw ValidationError("d_embed must be >= 2");
    IdentityBank bank;
    for (int id : identities) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(id) * 0x2545F4914F6CDD1DULL + 7));
        bank[id] = random_unit(rng, d_embed);
    }
    return bank;
}

Embedding drift_offset(const NoiseModel& model, std::uint64_t seed, int identity, int frame, Eigen::Index dim) {
    Embedding out = Embedding::Zero(dim);
    if (model.embed_drift == 0.0) return out;
    const std::uint64_t base = derive_seed(derive_seed(seed, hash_name("drift")), static_cast<std::uint64_t>(identity));
    const int step = (frame - 1) / model.drift_period;
    const double t = static_cast<double>((frame - 1) % model.drift_period) / model.drift_period;
    std::normal_distribution<double> normal(0.0, model.embed_drift);
    for (int a = 0; a < 2; ++a) {
        std::mt19937_64 rng(derive_seed(base, static_cast<std::uint64_t>(step + a)));
        const double weight = a == 0 ? 1.0 - t : t;
        for (Eigen::Index i = 0; i < dim; ++i) out[i] += weight * normal(rng);
    }
    return out;
}

FrameDetections detect_frame(const std::vector<GtEntry>& gt_boxes, const NoiseModel& model,
                             const IdentityBank& bank, std::uint64_t seed, int frame, int image_width,
                             int image_height) {
    model.validate();
    if (bank.empty() && !gt_boxes.empty()) throw ValidationError("identity bank is empty");
    const Eigen::Index dim = bank.empty() ? 32 : bank.begin()->second.size();

    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(frame)));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    FrameDetections out;
    for (const auto& gt : gt_boxes) {
        const auto it = bank.find(gt.identity);
        if (it == bank.end()) throw ValidationError("identity " + std::to_string(gt.identity) + " not in bank");
        if (uniform(rng) < model.miss_prob) continue;

        const double cx = gt.box.cx() + normal(rng) * model.center_jitter * gt.box.w;
        const double cy = gt.box.cy() + normal(rng) * model.center_jitter * gt.box.h;
        const double w = gt.box.w * std::exp(normal(rng) * model.size_jitter);
        const double h = gt.box.h * std::exp(normal(rng) * model.size_jitter);
        const double conf = clamp_confidence(model.conf_true_mean + normal(rng) * model.conf_true_std);

        Embedding e = it->second + drift_offset(model, seed, gt.identity, frame, dim);
        if (model.embed_noise > 0.0) {
            for (Eigen::Index i = 0; i < e.size(); ++i) e[i] += normal(rng) * model.embed_noise;
        }
        const BoundingBox box = model.center_jitter == 0.0 && model.size_jitter == 0.0
                                    ? gt.box
                                    : BoundingBox::from_center(cx, cy, w, h);
        out.push_back({box, conf}, normalized(e), gt.identity);
    }

    int false_count = 0;
    if (model.fp_rate > 0.0) false_count = std::poisson_distribution<int>(model.fp_rate)(rng);
    for (int n = 0; n < false_count; ++n) {
        double w = model.fp_min_width + uniform(rng) * (model.fp_max_width - model.fp_min_width);
        double h = w / model.fp_aspect;
        w = std::min(w, static_cast<double>(image_width));
        h = std::min(h, static_cast<double>(image_height));
        const double x = uniform(rng) * (image_width - w);
        const double y = uniform(rng) * (image_height - h);
        const double conf = clamp_confidence(model.conf_false_mean + normal(rng) * model.conf_false_std);
        out.push_back({{x, y, w, h}, conf}, random_unit(rng, dim), kFalseIdentity);
    }
    return out;
}

std::vector<FrameDetections> detect_sequence(const Sequence& sequence, const NoiseModel& model,
                                             const IdentityBank& bank, std::uint64_t seed) {
    const auto by_frame = sequence.gt_by_frame();
    std::vector<FrameDetections> out;
    out.reserve(by_frame.size());
    for (std::size_t f = 0; f < by_frame.size(); ++f) {
        out.push_back(detect_frame(by_frame[f], model, bank, seed, static_cast<int>(f) + 1, sequence.width,
                                   sequence.height));
    }
    return out;
}

namespace {

struct Walker {
    int identity = 0;
    int death = 0;  // last frame alive
    double cx = 0, cy = 0, w = 0;
    double heading = 0, speed = 0, base_speed = 0;
};

}  // namespace

Sequence make_synthetic_sequence(const SceneConfig& config, std::uint64_t seed, std::string name) {
    if (config.length < 1 || config.concurrent < 1 || config.min_lifetime < 1 || config.birth_gap < 0 ||
        config.max_lifetime < config.min_lifetime || !(config.min_width > 0.0) ||
        config.max_width < config.min_width || !(config.fps > 0.0)) {
        throw ValidationError("invalid scene configuration");
    }
    std::mt19937_64 rng(derive_seed(seed, hash_name(name)));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::uniform_int_distribution<int> lifetime(config.min_lifetime, config.max_lifetime);

    Sequence seq;
    seq.name = std::move(name);
    seq.fps = config.fps;
    seq.width = config.width;
    seq.height = config.height;
    seq.length = config.length;

    int next_id = 1;
    auto spawn = [&](int frame, bool initial) {
        Walker o;
        o.identity = next_id++;
        // Initial objects are mid-life so deaths are staggered.
        o.death = frame + (initial ? lifetime(rng) * (0.2 + 0.8 * uniform(rng)) : lifetime(rng)) - 1;
        o.w = config.min_width + uniform(rng) * (config.max_width - config.min_width);
        const double h = o.w / config.aspect;
        o.cx = o.w / 2 + uniform(rng) * (config.width - o.w);
        o.cy = h / 2 + uniform(rng) * (config.height - h);
        o.heading = uniform(rng) * 2.0 * std::numbers::pi;
        o.base_speed = config.min_speed + uniform(rng) * (config.max_speed - config.min_speed);
        o.speed = o.base_speed;
        return o;
    };

    std::vector<Walker> alive;
    for (int i = 0; i < config.concurrent; ++i) alive.push_back(spawn(1, true));

    int last_death = -config.birth_gap;  // first frame an object was missing
    for (int frame = 1; frame <= config.length; ++frame) {
        const auto before = alive.size();
        std::erase_if(alive, [frame](const Walker& o) { return o.death < frame; });
        if (alive.size() != before) last_death = frame;
        if (frame - last_death >= config.birth_gap) {
            while (static_cast<int>(alive.size()) < config.concurrent) alive.push_back(spawn(frame, false));
        }
        for (const auto& o : alive) {
            const double h = o.w / config.aspect;
            seq.gt.push_back({frame, o.identity, BoundingBox::from_center(o.cx, o.cy, o.w, h), 1.0});
        }
        // Advance to the next frame.
        for (auto& o : alive) {
            o.heading += normal(rng) * config.heading_noise;
            o.speed += 0.05 * (o.base_speed - o.speed) + normal(rng) * config.speed_noise;
            o.speed = std::max(0.0, o.speed);
            o.w = std::clamp(o.w * std::exp(normal(rng) * config.scale_noise), config.min_width,
                             config.max_width);
            const double h = o.w / config.aspect;
            o.cx += o.speed * std::cos(o.heading);
            o.cy += o.speed * std::sin(o.heading);
            if (o.cx - o.w / 2 < 0 || o.cx + o.w / 2 > config.width) {
                o.heading = std::numbers::pi - o.heading;
                o.cx = std::clamp(o.cx, o.w / 2, config.width - o.w / 2);
            }
            if (o.cy - h / 2 < 0 || o.cy + h / 2 > config.height) {
                o.heading = -o.heading;
                o.cy = std::clamp(o.cy, h / 2, config.height - h / 2);
            }
        }
    }
    return seq;
}

namespace {

constexpr std::array<char, 8> kEmbMagic{'F', 'R', 'A', 'E', 'M', 'B', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

}  // namespace

void write_embeddings(const std::filesystem::path& path, const std::vector<Embedding>& rows) {
    const std::uint32_t dim = rows.empty() ? 0 : static_cast<std::uint32_t>(rows.front().size());
    std::string out(kEmbMagic.begin(), kEmbMagic.end());
    put_u32(out, static_cast<std::uint32_t>(rows.size()));
    put_u32(out, dim);
    out.reserve(out.size() + rows.size() * dim * 4);
    for (const auto& r : rows) {
        if (static_cast<std::uint32_t>(r.size()) != dim) throw ValidationError("embedding rows differ in length");
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            const float f = static_cast<float>(r[i]);
            std::uint32_t bits = 0;
            std::memcpy(&bits, &f, sizeof bits);
            put_u32(out, bits);
        }
    }
    write_file(path, out);
}

std::vector<Embedding> read_embeddings(const std::filesystem::path& path) {
    const std::string in = read_file(path);
    if (in.size() < 16 || !std::equal(kEmbMagic.begin(), kEmbMagic.end(), in.begin())) {
        throw ParseError(path.string() + ": not an embedding file");
    }
    const std::uint32_t count = get_u32(in, 8);
    const std::uint32_t dim = get_u32(in, 12);
    if (in.size() != 16 + static_cast<std::size_t>(count) * dim * 4) {
        throw ParseError(path.string() + ": truncated embedding file");
    }
    std::vector<Embedding> rows(count, Embedding(static_cast<Eigen::Index>(dim)));
    std::size_t pos = 16;
    for (auto& r : rows) {
        for (std::uint32_t i = 0; i < dim; ++i, pos += 4) {
            const std::uint32_t bits = get_u32(in, pos);
            float f = 0.0f;
            std::memcpy(&f, &bits, sizeof f);
            r[static_cast<Eigen::Index>(i)] = f;
        }
    }
    return rows;
}

void save_detections(const std::filesystem::path& det_dir, const std::vector<FrameDetections>& frames) {
    std::vector<DetectionRow> rows;
    std::vector<Embedding> embeddings;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        for (std::size_t i = 0; i < frames[f].size(); ++i) {
            rows.push_back({static_cast<int>(f) + 1, frames[f].detections[i].box, frames[f].detections[i].confidence});
            embeddings.push_back(frames[f].embeddings[i]);
        }
    }
    write_file(det_dir / "det.txt", write_detections(rows));
    write_embeddings(det_dir / "det.emb", embeddings);
}

std::vector<FrameDetections> load_detections(const std::filesystem::path& det_dir, int length) {
    const auto rows = parse_detections(read_file(det_dir / "det.txt"));
    const auto embeddings = read_embeddings(det_dir / "det.emb");
    if (rows.size() != embeddings.size()) {
        throw ParseError(det_dir.string() + ": det.txt and det.emb row counts differ");
    }
    std::vector<FrameDetections> frames(static_cast<std::size_t>(std::max(length, 0)));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int f = rows[i].frame;
        if (f < 1 || f > length) throw ParseError("detection frame " + std::to_string(f) + " out of range");
        frames[static_cast<std::size_t>(f - 1)].push_back({rows[i].box, rows[i].confidence},
                                                          normalized(embeddings[i]), kUnknownIdentity);
    }
    return frames;
}

}  // namespace framot
