#pragma once

#include <array>
#include <string>
#include <vector>

#include "framot/mot_io.hpp"

namespace framot {

/// Boxes of one frame with their identities (parallel vectors).
struct FrameBoxes {
    std::vector<int> ids;
    std::vector<BoundingBox> boxes;
};

/// Index 0 is frame 1.
using FrameSeries = std::vector<FrameBoxes>;

FrameSeries series_from_gt(const Sequence& sequence);
FrameSeries series_from_result(const TrackResult& result, int length);

// ---------------------------------------------------------------------------
// CLEAR-MOT

struct ClearCounts {
    long gt = 0;
    long matches = 0;
    long fp = 0;
    long fn = 0;
    long idsw = 0;

    /// 1 - (FP + FN + IDSW) / GT. Throws ValidationError when GT is empty.
    double mota() const;
    ClearCounts& operator+=(const ClearCounts& o);
};

/// Per frame, pairs matched in the previous frame are kept while their IoU
/// stays >= threshold; the remaining objects are matched by assignment
/// maximizing total IoU among pairs with IoU >= threshold. An identity switch
/// is counted when a GT object is matched to a different prediction than at
/// its last match.
ClearCounts clear_mot(const FrameSeries& gt, const FrameSeries& pred, double iou_threshold = 0.5);

// ---------------------------------------------------------------------------
// Identity metrics

struct IdCounts {
    long idtp = 0;
    long idfp = 0;
    long idfn = 0;

    /// 2 IDTP / (2 IDTP + IDFP + IDFN); 1 when there is nothing to match.
    double idf1() const;
    IdCounts& operator+=(const IdCounts& o);
};

IdCounts id_metrics(const FrameSeries& gt, const FrameSeries& pred, double iou_threshold = 0.5);

// ---------------------------------------------------------------------------
// HOTA

inline constexpr int kHotaAlphaCount = 19;

/// alpha_i = 0.05 (i + 1).
double hota_alpha(int index);

struct HotaCounts {
    std::array<double, kHotaAlphaCount> tp{};
    std::array<double, kHotaAlphaCount> fn{};
    std::array<double, kHotaAlphaCount> fp{};
    /// Sum over true positives of the association accuracy of their pair,
    /// i.e. AssA_alpha * TP_alpha, so counts from several videos can be pooled.
    std::array<double, kHotaAlphaCount> assoc{};

    double det_a(int alpha) const;
    double ass_a(int alpha) const;
    double hota(int alpha) const;
    /// Means over the alpha grid. Empty GT and prediction give 1.
    double hota() const;
    double det_a() const;
    double ass_a() const;
    HotaCounts& operator+=(const HotaCounts& o);
};

/// For each alpha, every frame is matched by maximizing the sum of
/// alignment(g, p) * IoU over pairs with IoU >= alpha, where alignment is the
/// global soft-count association score of the two trajectories.
HotaCounts hota(const FrameSeries& gt, const FrameSeries& pred);

// ---------------------------------------------------------------------------
// Reports

struct EvalCounts {
    ClearCounts clear;
    IdCounts id;
    HotaCounts hota;

    EvalCounts& operator+=(const EvalCounts& o);
};

EvalCounts evaluate(const FrameSeries& gt, const FrameSeries& pred, double iou_threshold = 0.5);

struct EvalResult {
    std::string sequence;  // sequence name or "all"
    int k = 1;
    double mota = 0.0;
    double idf1 = 0.0;
    double hota = 0.0;
    double det_a = 0.0;
    double ass_a = 0.0;
    long fp = 0;
    long fn = 0;
    long idsw = 0;
    long gt_boxes = 0;
};

EvalResult summarize(const EvalCounts& counts, std::string sequence, int k);

struct AggregateResult {
    double mhota = 0.0;
    double mmota = 0.0;
    double midf1 = 0.0;
    double vr = 0.0;  // (HOTA_max - HOTA_min) / HOTA_max over k
    std::vector<EvalResult> per_k;

    std::string to_json() const;
};

/// Unweighted means over the per-k results. Throws ValidationError for an
/// empty input or when the best HOTA is 0.
AggregateResult aggregate(const std::vector<EvalResult>& per_k);

/// "sequence,k,metric,value" rows.
std::string eval_csv(const std::vector<EvalResult>& rows);

// ---------------------------------------------------------------------------
// Candidate analysis

struct CandidateRow {
    int k = 1;
    double r = 1.0;
    double mean_candidates = 0.0;
    long samples = 0;
};

/// For every consecutive frame pair of every strided video and every object
/// present in both frames that moved (d* > 0), counts the objects of the
/// later frame within r * d* of its earlier position, and averages.
std::vector<CandidateRow> candidate_curve(const Sequence& gt, const std::vector<int>& k_set,
                                          const std::vector<double>& r_set);
/// Same, pooled over several sequences.
std::vector<CandidateRow> candidate_curve(const std::vector<Sequence>& gt, const std::vector<int>& k_set,
                                          const std::vector<double>& r_set);

std::string candidate_csv(const std::vector<CandidateRow>& rows);

}  // namespace framot
