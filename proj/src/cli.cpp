#include "framot/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "framot/benchmark.hpp"
#include "framot/error.hpp"
#include "framot/framerate_sim.hpp"
#include "framot/metrics.hpp"
#include "framot/seeding.hpp"

namespace fs = std::filesystem;

namespace framot {

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys{
        {"seed", "1", "", "root seed; every random stream is derived from it"},
        {"data_dir", "", "", "dataset root: one directory per sequence with info.txt and gt/gt.txt"},
        {"train_dir", "", "", "training dataset root (train, export-affinity); defaults to data_dir"},
        {"out_dir", "out", "", "output directory"},
        {"results_dir", "", "", "tracker result files (track writes, eval reads); defaults to out_dir/results"},
        {"det_dir", "", "", "detection root (gen-detections writes, track reads); defaults to data_dir"},
        {"checkpoint", "", "", "FAAM checkpoint path (train writes, track and export-affinity read)"},
        {"k_set", "1,2,4,8,16,25,36,50", "k", "sampling factors of the benchmark"},
        {"num_sequences", "10", "", "synth: number of sequences to generate"},
        {"sequence_prefix", "synth", "", "synth: sequence name prefix"},
        {"scene.length", "600", "N", "synth: frames per sequence"},
        {"scene.fps", "25", "F", "synth: source frame rate"},
        {"scene.width", "1920", "", "synth: image width"},
        {"scene.height", "1080", "", "synth: image height"},
        {"scene.concurrent", "14", "", "synth: objects alive at once"},
        {"scene.min_lifetime", "300", "", "synth: shortest object lifetime in frames"},
        {"scene.max_lifetime", "900", "", "synth: longest object lifetime in frames"},
        {"scene.birth_gap", "35", "", "synth: frames after a disappearance before new objects appear"},
        {"scene.min_width", "45", "", "synth: smallest box width"},
        {"scene.max_width", "100", "", "synth: largest box width"},
        {"scene.min_speed", "1", "", "synth: slowest speed, pixels per source frame"},
        {"scene.max_speed", "5", "", "synth: fastest speed, pixels per source frame"},
        {"noise.center_jitter", "0.05", "", "detector: centre shift std as a fraction of box size"},
        {"noise.size_jitter", "0.05", "", "detector: log-size std"},
        {"noise.miss_prob", "0.1", "", "detector: probability a true box is missed"},
        {"noise.fp_rate", "1", "", "detector: expected false positives per frame"},
        {"noise.conf_true_mean", "0.8", "", "detector: confidence mean of true boxes"},
        {"noise.conf_true_std", "0.15", "", "detector: confidence std of true boxes"},
        {"noise.conf_false_mean", "0.3", "", "detector: confidence mean of false boxes"},
        {"noise.conf_false_std", "0.15", "", "detector: confidence std of false boxes"},
        {"noise.embed_noise", "0.25", "", "detector: per-dimension appearance noise std"},
        {"noise.embed_drift", "0", "", "detector: per-dimension std of the slow appearance drift"},
        {"noise.drift_period", "50", "", "detector: frames between independent drift anchors"},
        {"embedding_dim", "32", "", "detector: appearance embedding size"},
        {"tracker.low_threshold", "0.1", "lambda_low", "detections below this confidence are discarded"},
        {"tracker.high_threshold", "0.6", "lambda_high", "confidence splitting the two association stages"},
        {"tracker.max_missing", "30", "lambda_i", "frames a trajectory may stay unmatched"},
        {"tracker.score_gate", "0.1", "", "association scores must exceed this"},
        {"tracker.pattern_iou_threshold", "0.7", "", "IoU needed to fuse a detection with a pattern"},
        {"tracker.appearance_momentum", "0.9", "", "appearance cache moving-average factor"},
        {"frame_rate_mode", "unknown", "", "known (cosine of F/k), unknown (IBDV) or blind"},
        {"ibdv_criterion", "dist", "", "IBDV pairing: dist, sim or random"},
        {"faam.rate_scale", "6", "s", "cosine frame-rate embedding scale"},
        {"faam.embedding_length", "128", "D_sigma", "frame-rate embedding length"},
        {"faam.affinity_hidden", "64,64,64", "", "hidden widths of the affinity sub-net"},
        {"faam.attention_hidden", "96,80", "", "hidden widths of the attention sub-net"},
        {"faam.channels", "64", "", "output channels of both sub-nets"},
        {"pts.periods", "3", "N_p", "training periods"},
        {"pts.use_patterns", "true", "", "false trains on raw detection pairs"},
        {"pts.k_set", "", "", "sampling factors for training pairs; defaults to k_set"},
        {"pts.cache_dir", "", "", "if set, each period's patterns are saved there"},
        {"train.learning_rate", "0.1", "lambda_A", "SGD step size"},
        {"train.steps_per_period", "3000", "tau", "SGD steps per period"},
        {"train.beta", "1", "beta", "association loss weight"},
        {"train.extractor_learning_rate", "0", "lambda_E", "accepted for completeness; the extractor is synthetic"},
        {"eval.iou_threshold", "0.5", "", "IoU threshold of CLEAR-MOT and IDF1"},
        {"r_set", "1,1.5,2,3,4,6,8", "r", "analyze-candidates: thresholding factors"},
        {"affinity_samples", "200", "", "export-affinity: frame pairs per source"},
    };
    return keys;
}

namespace {

const ConfigKey* find_key(const std::string& name) {
    for (const auto& k : config_keys()) {
        if (k.name == name) return &k;
    }
    return nullptr;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

RunConfig::RunConfig() {
    for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (find_key(key) == nullptr) throw ConfigError(key, "unknown configuration key");
    values_[key] = value;
}

void RunConfig::set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(trim(assignment), "expected key=value");
    set(trim(std::string_view(assignment).substr(0, eq)), trim(std::string_view(assignment).substr(eq + 1)));
}

void RunConfig::merge_text(std::string_view text) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(pos, end - pos));
        pos = end + 1;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        set(line);
    }
}

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "unknown configuration key");
    return it->second;
}

const std::string& RunConfig::require(const std::string& key) const {
    const std::string& v = get(key);
    if (v.empty()) throw ConfigError(key, "missing required value");
    return v;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& v = require(key);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + v + "'");
    }
}

int RunConfig::get_int(const std::string& key) const {
    const std::string& v = require(key);
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key, "expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::string& v = require(key);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = require(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<int> RunConfig::get_ints(const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : split_list(require(key))) {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size()) {
            throw ConfigError(key, "expected a comma-separated integer list");
        }
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(require(key))) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError(key, "expected a comma-separated number list");
        }
    }
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
}

std::string RunConfig::dump() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Typed views

namespace {

// Re-raises validation failures of a config section as a config error.
template <typename T>
T checked(const std::string& key, T value) {
    try {
        value.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(key, e.what());
    }
    return value;
}

}  // namespace

SceneConfig scene_config(const RunConfig& c) {
    SceneConfig s;
    s.length = c.get_int("scene.length");
    s.fps = c.get_double("scene.fps");
    s.width = c.get_int("scene.width");
    s.height = c.get_int("scene.height");
    s.concurrent = c.get_int("scene.concurrent");
    s.min_lifetime = c.get_int("scene.min_lifetime");
    s.max_lifetime = c.get_int("scene.max_lifetime");
    s.birth_gap = c.get_int("scene.birth_gap");
    s.min_width = c.get_double("scene.min_width");
    s.max_width = c.get_double("scene.max_width");
    s.min_speed = c.get_double("scene.min_speed");
    s.max_speed = c.get_double("scene.max_speed");
    return s;
}

NoiseModel noise_model(const RunConfig& c) {
    NoiseModel m;
    m.center_jitter = c.get_double("noise.center_jitter");
    m.size_jitter = c.get_double("noise.size_jitter");
    m.miss_prob = c.get_double("noise.miss_prob");
    m.fp_rate = c.get_double("noise.fp_rate");
    m.conf_true_mean = c.get_double("noise.conf_true_mean");
    m.conf_true_std = c.get_double("noise.conf_true_std");
    m.conf_false_mean = c.get_double("noise.conf_false_mean");
    m.conf_false_std = c.get_double("noise.conf_false_std");
    m.embed_noise = c.get_double("noise.embed_noise");
    m.embed_drift = c.get_double("noise.embed_drift");
    m.drift_period = c.get_int("noise.drift_period");
    return checked("noise", m);
}

TrackerConfig tracker_config(const RunConfig& c) {
    TrackerConfig t;
    t.low_threshold = c.get_double("tracker.low_threshold");
    t.high_threshold = c.get_double("tracker.high_threshold");
    t.max_missing = c.get_int("tracker.max_missing");
    t.score_gate = c.get_double("tracker.score_gate");
    t.pattern_iou_threshold = c.get_double("tracker.pattern_iou_threshold");
    t.appearance_momentum = c.get_double("tracker.appearance_momentum");
    try {
        t.frame_rate_mode = parse_frame_rate_mode(c.require("frame_rate_mode"));
    } catch (const ValidationError& e) {
        throw ConfigError("frame_rate_mode", e.what());
    }
    try {
        t.ibdv_criterion = parse_ibdv_criterion(c.require("ibdv_criterion"));
    } catch (const ValidationError& e) {
        throw ConfigError("ibdv_criterion", e.what());
    }
    t.rate_scale = c.get_double("faam.rate_scale");
    t.embedding_length = c.get_int("faam.embedding_length");
    return checked("tracker", t);
}

FaamShape faam_shape(const RunConfig& c) {
    FaamShape s;
    s.embedding_length = c.get_int("faam.embedding_length");
    s.affinity_hidden = c.get_ints("faam.affinity_hidden");
    s.attention_hidden = c.get_ints("faam.attention_hidden");
    s.channels = c.get_int("faam.channels");
    if (s.embedding_length < 1) throw ConfigError("faam.embedding_length", "must be >= 1");
    if (s.channels < 1) throw ConfigError("faam.channels", "must be >= 1");
    for (int h : s.affinity_hidden) {
        if (h < 1) throw ConfigError("faam.affinity_hidden", "widths must be >= 1");
    }
    for (int h : s.attention_hidden) {
        if (h < 1) throw ConfigError("faam.attention_hidden", "widths must be >= 1");
    }
    return s;
}

TrainConfig train_config(const RunConfig& c) {
    TrainConfig t;
    t.learning_rate = c.get_double("train.learning_rate");
    t.steps_per_period = c.get_int("train.steps_per_period");
    t.beta = c.get_double("train.beta");
    t.extractor_learning_rate = c.get_double("train.extractor_learning_rate");
    t.seed = derive_seed(c.get_u64("seed"), hash_name("init"));
    return checked("train", t);
}

PtsConfig pts_config(const RunConfig& c) {
    PtsConfig p;
    p.periods = c.get_int("pts.periods");
    p.use_patterns = c.get_bool("pts.use_patterns");
    p.k_set = c.get("pts.k_set").empty() ? c.get_ints("k_set") : c.get_ints("pts.k_set");
    p.seed = derive_seed(c.get_u64("seed"), hash_name("pairs"));
    return checked("pts", p);
}

std::string usage() {
    std::ostringstream out;
    out << "usage: framot <subcommand> [--config FILE] [--set KEY=VALUE]... [--jobs N] [--trivial]\n\n"
           "subcommands:\n"
           "  synth               generate synthetic sequences into data_dir\n"
           "  simulate            strided multi-frame-rate videos of data_dir into out_dir\n"
           "  dynsim              randomly sampled videos and gap statistics into out_dir\n"
           "  gen-detections      synthetic detections (det.txt + det.emb) for data_dir\n"
           "  train               periodic training; writes checkpoint and out_dir/pts_log.jsonl\n"
           "  track               tracks every video of data_dir; writes results_dir/<video>.txt\n"
           "  eval                scores results_dir against data_dir; writes eval.csv and summary.json\n"
           "  analyze-candidates  candidate-number curves into out_dir/candidates.csv\n"
           "  export-affinity     affinity feature scatter into out_dir/affinity.csv\n\n"
           "Flags override the config file. Configuration keys (default, symbol):\n";
    for (const auto& k : config_keys()) {
        out << "  " << k.name << " = " << (k.default_value.empty() ? "\"\"" : k.default_value);
        if (!k.symbol.empty()) out << "  [" << k.symbol << "]";
        out << "\n      " << k.help << "\n";
    }
    out << "\nExit codes: 0 success, 1 pipeline error, 2 configuration error.\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

struct Context {
    RunConfig config;
    int jobs = 1;
    bool trivial = false;

    fs::path path(const std::string& key) const { return config.require(key); }
    fs::path out_dir() const { return path("out_dir"); }
    fs::path results_dir() const {
        return config.get("results_dir").empty() ? out_dir() / "results" : path("results_dir");
    }
    fs::path det_root() const { return config.get("det_dir").empty() ? path("data_dir") : path("det_dir"); }
    std::uint64_t seed() const { return config.get_u64("seed"); }
    std::uint64_t detection_seed() const { return derive_seed(seed(), hash_name("detections")); }
};

std::vector<Sequence> load_sequences(const fs::path& root) {
    auto seqs = load_dataset(root);
    if (seqs.empty()) throw std::runtime_error("no sequences found under " + root.string());
    return seqs;
}

// Detections from det files when present, otherwise from the synthetic oracle.
std::vector<std::vector<FrameDetections>> detections_for(const Context& ctx, const std::vector<Sequence>& seqs,
                                                         bool allow_files) {
    const NoiseModel noise = noise_model(ctx.config);
    const int dim = ctx.config.get_int("embedding_dim");
    std::vector<std::vector<FrameDetections>> out;
    for (const auto& s : seqs) {
        const fs::path dir = ctx.det_root() / s.name / "det";
        if (allow_files && fs::exists(dir / "det.txt")) {
            out.push_back(load_detections(dir, s.length));
        } else {
            out.push_back(synthesize_detections(s, noise, dim, ctx.detection_seed()));
        }
    }
    return out;
}

int cmd_synth(const Context& ctx) {
    const SceneConfig scene = scene_config(ctx.config);
    const int count = ctx.config.get_int("num_sequences");
    if (count < 1) throw ConfigError("num_sequences", "must be >= 1");
    const fs::path root = ctx.path("data_dir");
    for (const auto& s : make_synthetic_dataset(scene, count, ctx.seed(), ctx.config.require("sequence_prefix"))) {
        save_sequence_dir(root / s.name, s);
    }
    return 0;
}

int cmd_simulate(const Context& ctx) {
    const auto k_set = ctx.config.get_ints("k_set");
    for (const auto& s : load_sequences(ctx.path("data_dir"))) {
        for (int k : k_set) {
            for (const auto& v : resample(s, k)) save_sequence_dir(ctx.out_dir() / v.sequence.name, v.sequence, resample_info(v));
        }
    }
    return 0;
}

int cmd_dynsim(const Context& ctx) {
    const auto k_set = ctx.config.get_ints("k_set");
    std::string stats;
    for (const auto& s : load_sequences(ctx.path("data_dir"))) {
        for (int k : k_set) {
            const auto [videos, gaps] = dynamic_resample(s, k, ctx.seed());
            for (const auto& v : videos) save_sequence_dir(ctx.out_dir() / v.sequence.name, v.sequence, resample_info(v));
            stats += "{\"sequence\":\"" + s.name + "\",\"k\":" + std::to_string(k) + ",\"gaps\":" + gaps.to_json() + "}\n";
        }
    }
    write_file(ctx.out_dir() / "gap_stats.jsonl", stats);
    return 0;
}

int cmd_gen_detections(const Context& ctx) {
    const auto seqs = load_sequences(ctx.path("data_dir"));
    const auto dets = detections_for(ctx, seqs, false);
    for (std::size_t i = 0; i < seqs.size(); ++i) save_detections(ctx.det_root() / seqs[i].name / "det", dets[i]);
    return 0;
}

int cmd_train(const Context& ctx) {
    const fs::path checkpoint = ctx.path("checkpoint");
    const TrackerConfig tracker = tracker_config(ctx.config);
    const FaamShape shape = faam_shape(ctx.config);
    const TrainConfig train = train_config(ctx.config);
    const PtsConfig pts = pts_config(ctx.config);
    const fs::path root = ctx.config.get("train_dir").empty() ? ctx.path("data_dir") : ctx.path("train_dir");
    const auto seqs = load_sequences(root);
    // Training needs oracle identities, so detections always come from the oracle.
    const Benchmark benchmark = build_benchmark(seqs, detections_for(ctx, seqs, false), pts.k_set);

    const std::string cache = ctx.config.get("pts.cache_dir");
    std::string log;
    const PtsResult result = run_pts(
        pts, benchmark, train, tracker, shape, ctx.jobs, [&](const PeriodLog& p) { log += p.to_json() + "\n"; },
        [&](int period, const PatternStore& store) {
            if (!cache.empty()) store.save(fs::path(cache) / ("patterns_p" + std::to_string(period) + ".bin"));
        });
    save_checkpoint(checkpoint, result.params);
    write_file(ctx.out_dir() / "pts_log.jsonl", log);
    return 0;
}

AssociationModel load_model(const Context& ctx) {
    if (ctx.trivial) return TrivialAssociation{};
    return load_checkpoint(ctx.path("checkpoint"));
}

int cmd_track(const Context& ctx) {
    const TrackerConfig tracker = tracker_config(ctx.config);
    const auto k_set = ctx.config.get_ints("k_set");
    const AssociationModel model = load_model(ctx);
    const auto seqs = load_sequences(ctx.path("data_dir"));
    const Benchmark benchmark = build_benchmark(seqs, detections_for(ctx, seqs, true), k_set);
    const auto tracked = track_benchmark(benchmark, model, tracker, ctx.jobs);
    for (std::size_t i = 0; i < tracked.size(); ++i) {
        write_file(ctx.results_dir() / (benchmark.videos[i].video.sequence.name + ".txt"),
                   write_results(tracked[i].result));
    }
    return 0;
}

int cmd_eval(const Context& ctx) {
    const auto k_set = ctx.config.get_ints("k_set");
    const auto seqs = load_sequences(ctx.path("data_dir"));
    std::vector<std::vector<FrameDetections>> no_detections;
    for (const auto& s : seqs) no_detections.emplace_back(static_cast<std::size_t>(s.length));
    const Benchmark benchmark = build_benchmark(seqs, no_detections, k_set);
    std::vector<TrackResult> results;
    for (const auto& v : benchmark.videos) {
        const fs::path file = ctx.results_dir() / (v.video.sequence.name + ".txt");
        if (!fs::exists(file)) throw std::runtime_error("missing result file " + file.string());
        results.push_back(parse_results(read_file(file)));
    }
    const auto eval = evaluate_benchmark(benchmark, results, ctx.jobs, ctx.config.get_double("eval.iou_threshold"));
    std::vector<EvalResult> rows = eval.per_sequence;
    rows.insert(rows.end(), eval.per_k.begin(), eval.per_k.end());
    write_file(ctx.out_dir() / "eval.csv", eval_csv(rows));
    write_file(ctx.out_dir() / "summary.json", eval.aggregate.to_json());
    return 0;
}

int cmd_candidates(const Context& ctx) {
    const auto rows = candidate_curve(load_sequences(ctx.path("data_dir")), ctx.config.get_ints("k_set"),
                                      ctx.config.get_doubles("r_set"));
    write_file(ctx.out_dir() / "candidates.csv", candidate_csv(rows));
    return 0;
}

int cmd_export_affinity(const Context& ctx) {
    const TrackerConfig tracker = tracker_config(ctx.config);
    const auto k_set = ctx.config.get_ints("k_set");
    const int samples = ctx.config.get_int("affinity_samples");
    if (samples < 0) throw ConfigError("affinity_samples", "must be >= 0");
    const AssociationModel model = ctx.config.get("checkpoint").empty() ? AssociationModel{TrivialAssociation{}}
                                                                        : load_model(ctx);
    const fs::path root = ctx.config.get("train_dir").empty() ? ctx.path("data_dir") : ctx.path("train_dir");
    const auto seqs = load_sequences(root);
    const Benchmark benchmark = build_benchmark(seqs, detections_for(ctx, seqs, false), k_set);
    const PatternStore store = generate_patterns(model, benchmark, tracker, ctx.jobs);
    const std::uint64_t seed = derive_seed(ctx.seed(), hash_name("affinity"));
    std::string csv = affinity_scatter(benchmark, nullptr, k_set, samples, seed, tracker, true);
    csv += affinity_scatter(benchmark, &store, k_set, samples, seed, tracker, false);
    write_file(ctx.out_dir() / "affinity.csv", csv);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Frame-rate agnostic multi-object tracking toolkit", "framot"};
    app.set_help_flag();
    app.require_subcommand(0, 1);

    bool help = false;
    std::string config_file;
    std::vector<std::string> overrides;
    int jobs = 0;
    bool trivial = false;
    app.add_flag("-h,--help", help, "show subcommands and configuration keys");

    using Handler = int (*)(const Context&);
    const std::vector<std::pair<std::string, Handler>> commands{
        {"synth", cmd_synth},
        {"simulate", cmd_simulate},
        {"dynsim", cmd_dynsim},
        {"gen-detections", cmd_gen_detections},
        {"train", cmd_train},
        {"track", cmd_track},
        {"eval", cmd_eval},
        {"analyze-candidates", cmd_candidates},
        {"export-affinity", cmd_export_affinity},
    };
    for (const auto& [name, handler] : commands) {
        auto* sub = app.add_subcommand(name);
        sub->set_help_flag();
        sub->add_flag("-h,--help", help);
        sub->add_option("-c,--config", config_file, "key=value configuration file");
        sub->add_option("-s,--set", overrides, "KEY=VALUE override (repeatable)");
        sub->add_option("-j,--jobs", jobs, "worker threads (default: hardware concurrency)");
        sub->add_flag("--trivial", trivial, "use the hand-crafted association scorer instead of a checkpoint");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::cerr << "framot: " << e.what() << "\n" << usage();
        return 2;
    }
    if (help || app.get_subcommands().empty()) {
        std::cout << usage();
        return help ? 0 : 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        Context ctx;
        if (!config_file.empty()) ctx.config.merge_text(read_file(config_file));
        for (const auto& o : overrides) ctx.config.set(o);
        ctx.jobs = jobs > 0 ? jobs : default_jobs();
        ctx.trivial = trivial;
        for (const auto& [cmd, handler] : commands) {
            if (cmd == name) return handler(ctx);
        }
    } catch (const ConfigError& e) {
        std::cerr << "framot " << name << ": config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "framot " << name << ": " << e.what() << "\n";
        return 1;
    }
    return 1;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace framot
