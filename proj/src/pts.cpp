#include "framot/pts.hpp"

#include <array>
#include <cstring>
#include <numeric>
#include <sstream>

#include "framot/error.hpp"
#include "framot/seeding.hpp"
#include "json.hpp"

namespace framot {

// ---------------------------------------------------------------------------
// PatternStore

void PatternStore::insert(PatternKey key, std::vector<TrackingPattern> patterns) {
    for (const auto& p : patterns) {
        if (p.frame != key.frame) throw ValidationError("pattern frame does not match its store key");
    }
    entries_[std::move(key)] = std::move(patterns);
}

const std::vector<TrackingPattern>* PatternStore::find(const PatternKey& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

std::size_t PatternStore::pattern_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [key, list] : entries_) n += list.size();
    return n;
}

namespace {

constexpr std::array<char, 8> kStoreMagic{'F', 'R', 'A', 'P', 'T', 'S', '0', '1'};

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void i32(int v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double d) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &d, sizeof bits);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out += s;
    }
    std::string out;
};

class Reader {
public:
    explicit Reader(const std::string& data) : data_(data) {}

    std::uint64_t raw(int bytes) {
        if (pos_ + static_cast<std::size_t>(bytes) > data_.size()) throw ParseError("truncated pattern store");
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        }
        pos_ += static_cast<std::size_t>(bytes);
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
    int i32() { return static_cast<int>(u32()); }
    double f64() {
        const std::uint64_t bits = raw(8);
        double d = 0.0;
        std::memcpy(&d, &bits, sizeof d);
        return d;
    }
    std::string str() {
        const std::uint32_t n = u32();
        if (pos_ + n > data_.size()) throw ParseError("truncated pattern store");
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void skip(std::size_t n) { pos_ += n; }
    bool done() const { return pos_ == data_.size(); }

private:
    const std::string& data_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string PatternStore::serialize() const {
    Writer w;
    w.out.assign(kStoreMagic.begin(), kStoreMagic.end());
    w.u32(static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [key, list] : entries_) {
        w.str(key.sequence);
        w.i32(key.k);
        w.i32(key.offset);
        w.i32(key.frame);
        w.u32(static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            for (double v : {p.loc.x, p.loc.y, p.loc.w, p.loc.h, p.pred.dx, p.pred.dy, p.pred.dw, p.pred.dh}) w.f64(v);
            w.i32(p.level);
            w.i32(p.frame);
            w.i32(p.sampling_k);
            w.i32(p.trajectory_id);
            w.i32(p.oracle_id);
            w.u32(static_cast<std::uint32_t>(p.appearance.size()));
            for (Eigen::Index i = 0; i < p.appearance.size(); ++i) w.f64(p.appearance[i]);
        }
    }
    return w.out;
}

PatternStore PatternStore::deserialize(const std::string& bytes) {
    if (bytes.size() < 8 || !std::equal(kStoreMagic.begin(), kStoreMagic.end(), bytes.begin())) {
        throw ParseError("not a pattern store (bad magic)");
    }
    Reader r(bytes);
    r.skip(8);
    PatternStore store;
    const std::uint32_t count = r.u32();
    for (std::uint32_t e = 0; e < count; ++e) {
        PatternKey key;
        key.sequence = r.str();
        key.k = r.i32();
        key.offset = r.i32();
        key.frame = r.i32();
        const std::uint32_t n = r.u32();
        std::vector<TrackingPattern> list;
        for (std::uint32_t i = 0; i < n; ++i) {
            TrackingPattern p;
            p.loc = {r.f64(), r.f64(), r.f64(), r.f64()};
            p.pred = {r.f64(), r.f64(), r.f64(), r.f64()};
            p.level = r.i32();
            p.frame = r.i32();
            p.sampling_k = r.i32();
            p.trajectory_id = r.i32();
            p.oracle_id = r.i32();
            const std::uint32_t dim = r.u32();
            if (dim > 1u << 16) throw ParseError("pattern store: implausible embedding size");
            p.appearance.resize(dim);
            for (std::uint32_t d = 0; d < dim; ++d) p.appearance[d] = r.f64();
            list.push_back(std::move(p));
        }
        store.insert(std::move(key), std::move(list));
    }
    if (!r.done()) throw ParseError("pattern store: trailing bytes");
    return store;
}

void PatternStore::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

PatternStore PatternStore::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

bool operator==(const PatternStore& a, const PatternStore& b) { return a.serialize() == b.serialize(); }

PatternStore generate_patterns(const AssociationModel& model, const Benchmark& benchmark,
                               const TrackerConfig& config, int jobs) {
    const auto tracked = track_benchmark(benchmark, model, config, jobs, true);
    PatternStore store;
    for (std::size_t i = 0; i < tracked.size(); ++i) {
        const auto& v = benchmark.videos[i].video;
        for (std::size_t f = 0; f < tracked[i].patterns.size(); ++f) {
            store.insert({v.parent, v.k, v.offset, static_cast<int>(f + 1)}, tracked[i].patterns[f]);
        }
    }
    return store;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
    if (steps_per_period < 0) throw ValidationError("steps per period must be >= 0");
    if (!(beta > 0.0)) throw ValidationError("beta must be positive");
}

void PtsConfig::validate() const {
    if (periods < 0) throw ValidationError("period count must be >= 0");
    if (k_set.empty()) throw ValidationError("training k_set is empty");
    for (int k : k_set) {
        if (k < 1) throw ValidationError("sampling factors must be >= 1");
    }
}

double PeriodLog::mean_loss() const {
    if (losses.empty()) return 0.0;
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

std::vector<double> PeriodLog::moving_average(int window) const {
    std::vector<double> out;
    if (window < 1 || losses.size() < static_cast<std::size_t>(window)) return out;
    double sum = std::accumulate(losses.begin(), losses.begin() + window, 0.0);
    out.push_back(sum / window);
    for (std::size_t i = static_cast<std::size_t>(window); i < losses.size(); ++i) {
        sum += losses[i] - losses[i - static_cast<std::size_t>(window)];
        out.push_back(sum / window);
    }
    return out;
}

std::string PeriodLog::to_json() const {
    nlohmann::ordered_json j;
    j["period"] = period;
    j["steps"] = steps;
    j["trained_steps"] = trained_steps;
    j["skipped_pairs"] = skipped_pairs;
    j["pattern_frames"] = pattern_frames;
    j["pattern_count"] = pattern_count;
    j["mean_loss"] = mean_loss();
    j["losses"] = losses;
    return j.dump();
}

std::optional<TrainingPair> sample_pair(const Benchmark& benchmark, const std::vector<int>& k_set,
                                        std::mt19937_64& rng) {
    // Eligible videos grouped by sequence, then by k.
    std::map<std::string, std::map<int, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < benchmark.videos.size(); ++i) {
        const auto& v = benchmark.videos[i].video;
        if (v.frame_map.size() < 2) continue;
        if (std::find(k_set.begin(), k_set.end(), v.k) == k_set.end()) continue;
        groups[v.parent][v.k].push_back(i);
    }
    if (groups.empty()) return std::nullopt;
    auto pick = [&rng](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

    auto seq = groups.begin();
    std::advance(seq, static_cast<long>(pick(groups.size())));
    auto kit = seq->second.begin();
    std::advance(kit, static_cast<long>(pick(seq->second.size())));
    const std::size_t video = kit->second[pick(kit->second.size())];
    const std::size_t length = benchmark.videos[video].video.frame_map.size();
    return TrainingPair{video, static_cast<int>(pick(length - 1)) + 1};
}

FrameRateEmbedding pair_sigma(const BenchmarkVideo& video, int frame, const FrameDetections& previous,
                              const FrameDetections& current, const TrackerConfig& config) {
    switch (config.frame_rate_mode) {
        case FrameRateMode::known:
            return encode_known(video.video.effective_fps, config.rate_scale, config.embedding_length);
        case FrameRateMode::unknown:
            return encode_ibdv(previous, current, config.ibdv_criterion, config.embedding_length,
                               video.video.sequence.width, video.video.sequence.height,
                               static_cast<std::uint64_t>(frame + 1));
        case FrameRateMode::blind:
            break;
    }
    return encode_blind(config.embedding_length);
}

std::optional<TrainingAffinity> pair_affinity(const Benchmark& benchmark, const TrainingPair& pair,
                                              const PatternStore* store, const TrackerConfig& config) {
    const auto& video = benchmark.videos.at(pair.video);
    const auto t = static_cast<std::size_t>(pair.frame - 1);
    const FrameDetections previous = filter_by_confidence(video.detections.at(t), config.low_threshold);
    const FrameDetections current = filter_by_confidence(video.detections.at(t + 1), config.low_threshold);
    FusedSet fused;
    if (store != nullptr) {
        const auto* patterns = store->find({video.video.parent, video.video.k, video.video.offset, pair.frame});
        if (patterns == nullptr) return std::nullopt;
        fused = match_and_fuse(previous, *patterns, config.pattern_iou_threshold);
    } else {
        fused = fuse_raw(previous);
    }
    return affinity_train(fused, current, video.video.sequence.width, video.video.sequence.height);
}

PtsResult run_pts(const PtsConfig& pts, const Benchmark& benchmark, const TrainConfig& train,
                  const TrackerConfig& tracker, const FaamShape& shape, int jobs,
                  const std::function<void(const PeriodLog&)>& on_period,
                  const std::function<void(int, const PatternStore&)>& on_patterns) {
    pts.validate();
    train.validate();
    tracker.validate();
    if (shape.embedding_length != tracker.embedding_length) {
        throw ValidationError("network embedding length does not match the tracker configuration");
    }

    PtsResult out;
    out.params = FaamParams::init(shape, train.seed);
    for (int period = 1; period <= pts.periods; ++period) {
        PeriodLog log;
        log.period = period;

        PatternStore store;
        if (pts.use_patterns) {
            const AssociationModel model = period == 1 ? AssociationModel{TrivialAssociation{}}
                                                       : AssociationModel{out.params};
            store = generate_patterns(model, benchmark, tracker, jobs);
            log.pattern_frames = store.frame_count();
            log.pattern_count = store.pattern_count();
            if (on_patterns) on_patterns(period, store);
        }

        std::mt19937_64 rng(derive_seed(pts.seed, static_cast<std::uint64_t>(period)));
        for (int step = 0; step < train.steps_per_period; ++step) {
            ++log.steps;
            const auto pair = sample_pair(benchmark, pts.k_set, rng);
            if (!pair) {
                ++log.skipped_pairs;
                continue;
            }
            const auto sample = pair_affinity(benchmark, *pair, pts.use_patterns ? &store : nullptr, tracker);
            if (!sample) {
                ++log.skipped_pairs;
                continue;
            }
            const auto& video = benchmark.videos[pair->video];
            const auto t = static_cast<std::size_t>(pair->frame - 1);
            const FrameRateEmbedding sigma =
                pair_sigma(video, pair->frame, filter_by_confidence(video.detections[t], tracker.low_threshold),
                           filter_by_confidence(video.detections[t + 1], tracker.low_threshold), tracker);
            if (sample->labels.mask.sum() == 0.0) continue;
            const double loss =
                train_step(sample->features, sigma, sample->labels, out.params, train.learning_rate, train.beta);
            ++log.trained_steps;
            log.losses.push_back(loss);
        }
        if (on_period) on_period(log);
        out.periods.push_back(std::move(log));
    }
    return out;
}

std::string affinity_scatter(const Benchmark& benchmark, const PatternStore* store, const std::vector<int>& k_set,
                             int samples, std::uint64_t seed, const TrackerConfig& config, bool header) {
    std::ostringstream out;
    if (header) out << "norm_dist,iou,cos_sim,level,label,pts_flag\n";
    std::mt19937_64 rng(seed);
    const int flag = store != nullptr ? 1 : 0;
    for (int s = 0; s < samples; ++s) {
        const auto pair = sample_pair(benchmark, k_set, rng);
        if (!pair) break;
        const auto sample = pair_affinity(benchmark, *pair, store, config);
        if (!sample) continue;
        const auto& z = sample->features;
        for (Eigen::Index i = 0; i < z.rows; ++i) {
            for (Eigen::Index j = 0; j < z.cols; ++j) {
                if (sample->labels.mask(i, j) == 0.0) continue;
                const AffinityFeature f = z.at(i, j);
                out << format_number(f.norm_dist) << ',' << format_number(f.iou) << ',' << format_number(f.cos_sim)
                    << ',' << format_number(f.level) << ',' << static_cast<int>(sample->labels.label(i, j)) << ','
                    << flag << '\n';
            }
        }
    }
    return out.str();
}

}  // namespace framot
