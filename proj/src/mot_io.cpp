#include "framot/mot_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "framot/error.hpp"

namespace framot {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double to_real(std::string_view field, int line_no) {
    double v = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw ParseError("expected a number, got '" + std::string(field) + "'", line_no);
    }
    return v;
}

int to_int(std::string_view field, int line_no) {
    int v = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec == std::errc() && ptr == end) return v;
    // Some tools write integral columns as "3.0".
    const double d = to_real(field, line_no);
    if (d != std::floor(d) || std::abs(d) > 1e9) {
        throw ParseError("expected an integer, got '" + std::string(field) + "'", line_no);
    }
    return static_cast<int>(d);
}

template <typename Fn>
void for_each_row(std::string_view text, std::size_t min_fields, Fn&& fn) {
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        ++line_no;
        const auto line = trim(text.substr(start, pos - start));
        start = pos + 1;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() < min_fields) {
            throw ParseError("expected at least " + std::to_string(min_fields) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        fn(fields, line_no);
    }
}

BoundingBox box_from(const std::vector<std::string_view>& f, int line_no) {
    BoundingBox b{to_real(f[2], line_no), to_real(f[3], line_no), to_real(f[4], line_no),
                  to_real(f[5], line_no)};
    if (!(b.w > 0.0) || !(b.h > 0.0)) {
        throw ValidationError("line " + std::to_string(line_no) + ": non-positive box");
    }
    return b;
}

}  // namespace

bool BoundingBox::valid() const noexcept {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0.0 &&
           h > 0.0;
}

std::vector<std::vector<GtEntry>> Sequence::gt_by_frame() const {
    std::vector<std::vector<GtEntry>> frames(static_cast<std::size_t>(std::max(length, 0)));
    for (const auto& e : gt) {
        if (e.frame >= 1 && e.frame <= length) frames[static_cast<std::size_t>(e.frame - 1)].push_back(e);
    }
    return frames;
}

void TrackResult::normalize() {
    std::stable_sort(boxes.begin(), boxes.end(), [](const TrackBox& a, const TrackBox& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.identity < b.identity;
    });
}

std::vector<GtEntry> parse_gt(std::string_view text, const GtParseOptions& options) {
    std::vector<GtEntry> out;
    std::set<std::pair<int, int>> seen;
    for_each_row(text, 7, [&](const std::vector<std::string_view>& f, int line_no) {
        GtEntry e;
        e.frame = to_int(f[0], line_no);
        e.identity = to_int(f[1], line_no);
        e.box = box_from(f, line_no);
        const double consider = to_real(f[6], line_no);
        if (f.size() >= 9) e.visibility = to_real(f[8], line_no);
        if (e.frame < 1) throw ValidationError("line " + std::to_string(line_no) + ": frame must be >= 1");
        if (e.identity < 1) {
            throw ValidationError("line " + std::to_string(line_no) + ": identity must be positive");
        }
        if (consider == 0.0 && !options.keep_ignored) return;
        if (!seen.emplace(e.frame, e.identity).second) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate (frame, identity)");
        }
        out.push_back(e);
    });
    return out;
}

std::vector<DetectionRow> parse_detections(std::string_view text) {
    std::vector<DetectionRow> out;
    for_each_row(text, 7, [&](const std::vector<std::string_view>& f, int line_no) {
        DetectionRow d;
        d.frame = to_int(f[0], line_no);
        d.box = box_from(f, line_no);
        d.confidence = to_real(f[6], line_no);
        out.push_back(d);
    });
    return out;
}

TrackResult parse_results(std::string_view text) {
    TrackResult out;
    std::set<std::pair<int, int>> seen;
    for_each_row(text, 7, [&](const std::vector<std::string_view>& f, int line_no) {
        TrackBox t;
        t.frame = to_int(f[0], line_no);
        t.identity = to_int(f[1], line_no);
        t.box = box_from(f, line_no);
        t.confidence = to_real(f[6], line_no);
        if (t.identity < 1) {
            throw ValidationError("line " + std::to_string(line_no) + ": identity must be positive");
        }
        if (!seen.emplace(t.frame, t.identity).second) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate (frame, identity)");
        }
        out.boxes.push_back(t);
    });
    out.normalize();
    return out;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

namespace {

void append_box(std::string& out, const BoundingBox& b) {
    out += format_number(b.x);
    out += ',';
    out += format_number(b.y);
    out += ',';
    out += format_number(b.w);
    out += ',';
    out += format_number(b.h);
}

}  // namespace

std::string write_gt(const std::vector<GtEntry>& gt) {
    std::string out;
    for (const auto& e : gt) {
        out += std::to_string(e.frame) + ',' + std::to_string(e.identity) + ',';
        append_box(out, e.box);
        out += ",1,1," + format_number(e.visibility) + '\n';
    }
    return out;
}

std::string write_detections(const std::vector<DetectionRow>& rows) {
    std::string out;
    for (const auto& d : rows) {
        out += std::to_string(d.frame) + ",-1,";
        append_box(out, d.box);
        out += ',' + format_number(d.confidence) + '\n';
    }
    return out;
}

std::string write_results(const TrackResult& result) {
    TrackResult sorted = result;
    sorted.normalize();
    std::string out;
    for (const auto& t : sorted.boxes) {
        out += std::to_string(t.frame) + ',' + std::to_string(t.identity) + ',';
        append_box(out, t.box);
        out += ',' + format_number(t.confidence) + ",-1,-1,-1\n";
    }
    return out;
}

SequenceStats sequence_stats(const Sequence& sequence) {
    std::set<int> ids;
    for (const auto& e : sequence.gt) ids.insert(e.identity);
    return {sequence.length, static_cast<int>(ids.size())};
}

InfoMap parse_info(std::string_view text) {
    InfoMap out;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#' || t.front() == ';' || t.front() == '[') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
        out.emplace_back(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
    }
    return out;
}

std::string write_info(const InfoMap& info) {
    std::string out;
    for (const auto& [k, v] : info) out += k + '=' + v + '\n';
    return out;
}

std::string info_value(const InfoMap& info, std::string_view key, std::string_view fallback) {
    for (const auto& [k, v] : info) {
        if (k == key) return v;
    }
    return std::string(fallback);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

Sequence load_sequence_dir(const std::filesystem::path& dir) {
    InfoMap info;
    if (std::filesystem::exists(dir / "info.txt")) {
        info = parse_info(read_file(dir / "info.txt"));
    } else if (std::filesystem::exists(dir / "seqinfo.ini")) {
        info = parse_info(read_file(dir / "seqinfo.ini"));
    }
    auto pick = [&](std::string_view a, std::string_view b, std::string_view fallback) {
        auto v = info_value(info, a);
        return v.empty() ? info_value(info, b, fallback) : v;
    };
    Sequence seq;
    seq.name = pick("name", "name", dir.filename().string());
    seq.fps = std::stod(pick("fps", "frameRate", "25"));
    seq.width = std::stoi(pick("width", "imWidth", "1920"));
    seq.height = std::stoi(pick("height", "imHeight", "1080"));
    const auto length = pick("length", "seqLength", "");
    seq.gt = parse_gt(read_file(dir / "gt" / "gt.txt"));
    int max_frame = 0;
    for (const auto& e : seq.gt) max_frame = std::max(max_frame, e.frame);
    seq.length = length.empty() ? max_frame : std::stoi(length);
    if (!(seq.fps > 0.0)) throw ValidationError(dir.string() + ": fps must be positive");
    if (seq.width <= 0 || seq.height <= 0) throw ValidationError(dir.string() + ": bad image size");
    if (max_frame > seq.length) throw ValidationError(dir.string() + ": gt frame beyond length");
    return seq;
}

void save_sequence_dir(const std::filesystem::path& dir, const Sequence& sequence, const InfoMap& extra) {
    InfoMap info{{"name", sequence.name},
                 {"fps", format_number(sequence.fps)},
                 {"width", std::to_string(sequence.width)},
                 {"height", std::to_string(sequence.height)},
                 {"length", std::to_string(sequence.length)}};
    info.insert(info.end(), extra.begin(), extra.end());
    write_file(dir / "info.txt", write_info(info));
    write_file(dir / "gt" / "gt.txt", write_gt(sequence.gt));
}

std::vector<Sequence> load_dataset(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "gt" / "gt.txt")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<Sequence> out;
    out.reserve(dirs.size());
    for (const auto& d : dirs) out.push_back(load_sequence_dir(d));
    return out;
}

}  // namespace framot
