#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace framot {

/// Additive box displacement (dx, dy, dw, dh) in pixels.
struct BoxOffset {
    double dx = 0.0;
    double dy = 0.0;
    double dw = 0.0;
    double dh = 0.0;
};

/// Axis-aligned box in MOTChallenge convention: (left, top, width, height).
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double cx() const noexcept { return x + 0.5 * w; }
    double cy() const noexcept { return y + 0.5 * h; }
    double right() const noexcept { return x + w; }
    double bottom() const noexcept { return y + h; }
    double area() const noexcept { return w * h; }

    /// w > 0, h > 0 and all coordinates finite.
    bool valid() const noexcept;

    static BoundingBox from_center(double cx, double cy, double w, double h) noexcept {
        return {cx - 0.5 * w, cy - 0.5 * h, w, h};
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline BoundingBox operator+(const BoundingBox& b, const BoxOffset& o) noexcept {
    return {b.x + o.dx, b.y + o.dy, b.w + o.dw, b.h + o.dh};
}

inline BoxOffset operator-(const BoundingBox& a, const BoundingBox& b) noexcept {
    return {a.x - b.x, a.y - b.y, a.w - b.w, a.h - b.h};
}

struct GtEntry {
    int frame = 0;     // 1-based
    int identity = 0;  // positive
    BoundingBox box;
    double visibility = 1.0;  // MOT17 stores a [0,1] ratio; synthetic data uses 1

    friend bool operator==(const GtEntry&, const GtEntry&) = default;
};

/// Ground truth of one video. Frames are the contiguous range 1..length.
struct Sequence {
    std::string name;
    double fps = 25.0;
    int width = 1920;
    int height = 1080;
    int length = 0;
    std::vector<GtEntry> gt;

    /// GT entries grouped by frame; index 0 is frame 1.
    std::vector<std::vector<GtEntry>> gt_by_frame() const;
};

struct TrackBox {
    int frame = 0;
    int identity = 0;
    BoundingBox box;
    double confidence = 1.0;

    friend bool operator==(const TrackBox&, const TrackBox&) = default;
};

/// Tracker output for one video. Kept sorted by (frame, identity).
struct TrackResult {
    std::vector<TrackBox> boxes;

    void normalize();
    friend bool operator==(const TrackResult&, const TrackResult&) = default;
};

/// A raw detection row: det.txt "frame,-1,x,y,w,h,conf".
struct DetectionRow {
    int frame = 0;
    BoundingBox box;
    double confidence = 1.0;
};

struct GtParseOptions {
    /// Keep rows whose consider-flag (7th field) is 0.
    bool keep_ignored = false;
};

std::vector<GtEntry> parse_gt(std::string_view text, const GtParseOptions& options = {});
std::vector<DetectionRow> parse_detections(std::string_view text);
TrackResult parse_results(std::string_view text);

std::string write_gt(const std::vector<GtEntry>& gt);
std::string write_detections(const std::vector<DetectionRow>& rows);
std::string write_results(const TrackResult& result);

/// Formats with at most 6 decimals and no trailing zeros.
std::string format_number(double v);

struct SequenceStats {
    int frame_count = 0;
    int identity_count = 0;
};

SequenceStats sequence_stats(const Sequence& sequence);

/// Plain key=value file. Section headers ("[Sequence]") and blank lines are
/// skipped; keys keep their insertion order on write.
using InfoMap = std::vector<std::pair<std::string, std::string>>;

InfoMap parse_info(std::string_view text);
std::string write_info(const InfoMap& info);
std::string info_value(const InfoMap& info, std::string_view key, std::string_view fallback = {});

/// Reads `<dir>/info.txt` (or MOTChallenge's seqinfo.ini) and `<dir>/gt/gt.txt`.
Sequence load_sequence_dir(const std::filesystem::path& dir);

/// Writes `<dir>/info.txt` and `<dir>/gt/gt.txt`. `extra` is appended to the
/// info file after the standard keys.
void save_sequence_dir(const std::filesystem::path& dir, const Sequence& sequence,
                       const InfoMap& extra = {});

/// Every immediate subdirectory of `root` holding a gt/gt.txt, sorted by name.
std::vector<Sequence> load_dataset(const std::filesystem::path& root);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace framot
