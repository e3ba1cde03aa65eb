#include "framot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include "json.hpp"
#include <sstream>

#include "framot/assignment.hpp"
#include "framot/association.hpp"
#include "framot/error.hpp"
#include "framot/framerate_sim.hpp"

namespace framot {

FrameSeries series_from_gt(const Sequence& sequence) {
    FrameSeries out(static_cast<std::size_t>(std::max(sequence.length, 0)));
    for (const auto& e : sequence.gt) {
        if (e.frame < 1) continue;
        if (static_cast<std::size_t>(e.frame) > out.size()) out.resize(static_cast<std::size_t>(e.frame));
        auto& f = out[static_cast<std::size_t>(e.frame - 1)];
        f.ids.push_back(e.identity);
        f.boxes.push_back(e.box);
    }
    return out;
}

FrameSeries series_from_result(const TrackResult& result, int length) {
    FrameSeries out(static_cast<std::size_t>(std::max(length, 0)));
    for (const auto& b : result.boxes) {
        if (b.frame < 1) continue;
        if (static_cast<std::size_t>(b.frame) > out.size()) out.resize(static_cast<std::size_t>(b.frame));
        auto& f = out[static_cast<std::size_t>(b.frame - 1)];
        f.ids.push_back(b.identity);
        f.boxes.push_back(b.box);
    }
    return out;
}

namespace {

const FrameBoxes kEmptyFrame{};

const FrameBoxes& frame_at(const FrameSeries& s, std::size_t t) { return t < s.size() ? s[t] : kEmptyFrame; }

Eigen::MatrixXd iou_matrix(const FrameBoxes& g, const FrameBoxes& p) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(g.boxes.size()), static_cast<Eigen::Index>(p.boxes.size()));
    for (std::size_t i = 0; i < g.boxes.size(); ++i) {
        for (std::size_t j = 0; j < p.boxes.size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = iou(g.boxes[i], p.boxes[j]);
        }
    }
    return m;
}

// Maps arbitrary ids to dense 0-based indices.
std::map<int, int> dense_ids(const FrameSeries& s) {
    std::map<int, int> ids;
    for (const auto& f : s) {
        for (int id : f.ids) ids.emplace(id, 0);
    }
    int n = 0;
    for (auto& [id, idx] : ids) idx = n++;
    return ids;
}

}  // namespace

// ---------------------------------------------------------------------------
// CLEAR-MOT

double ClearCounts::mota() const {
    if (gt == 0) throw ValidationError("MOTA is undefined without ground-truth boxes");
    return 1.0 - static_cast<double>(fp + fn + idsw) / static_cast<double>(gt);
}

ClearCounts& ClearCounts::operator+=(const ClearCounts& o) {
    gt += o.gt;
    matches += o.matches;
    fp += o.fp;
    fn += o.fn;
    idsw += o.idsw;
    return *this;
}

ClearCounts clear_mot(const FrameSeries& gt, const FrameSeries& pred, double iou_threshold) {
    ClearCounts out;
    std::map<int, int> previous;  // gt id -> pred id, matched in the previous frame
    std::map<int, int> last;      // gt id -> pred id at its last match
    const std::size_t frames = std::max(gt.size(), pred.size());
    for (std::size_t t = 0; t < frames; ++t) {
        const FrameBoxes& g = frame_at(gt, t);
        const FrameBoxes& p = frame_at(pred, t);
        const Eigen::MatrixXd sim = iou_matrix(g, p);
        std::vector<int> g_match(g.ids.size(), -1);
        std::vector<bool> p_used(p.ids.size(), false);

        for (std::size_t i = 0; i < g.ids.size(); ++i) {
            const auto it = previous.find(g.ids[i]);
            if (it == previous.end()) continue;
            for (std::size_t j = 0; j < p.ids.size(); ++j) {
                if (p.ids[j] == it->second && !p_used[j] &&
                    sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) >= iou_threshold) {
                    g_match[i] = static_cast<int>(j);
                    p_used[j] = true;
                    break;
                }
            }
        }

        std::vector<std::size_t> rows, cols;
        for (std::size_t i = 0; i < g.ids.size(); ++i) {
            if (g_match[i] < 0) rows.push_back(i);
        }
        for (std::size_t j = 0; j < p.ids.size(); ++j) {
            if (!p_used[j]) cols.push_back(j);
        }
        Eigen::MatrixXd cost(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t a = 0; a < rows.size(); ++a) {
            for (std::size_t b = 0; b < cols.size(); ++b) {
                const double v = sim(static_cast<Eigen::Index>(rows[a]), static_cast<Eigen::Index>(cols[b]));
                cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v >= iou_threshold ? -v : kForbidden;
            }
        }
        for (const auto& [a, b] : solve_assignment(cost).pairs) {
            g_match[rows[static_cast<std::size_t>(a)]] = static_cast<int>(cols[static_cast<std::size_t>(b)]);
        }

        std::map<int, int> current;
        long matched = 0;
        for (std::size_t i = 0; i < g.ids.size(); ++i) {
            if (g_match[i] < 0) continue;
            const int gid = g.ids[i];
            const int pid = p.ids[static_cast<std::size_t>(g_match[i])];
            const auto it = last.find(gid);
            if (it != last.end() && it->second != pid) ++out.idsw;
            last[gid] = pid;
            current[gid] = pid;
            ++matched;
        }
        previous = std::move(current);
        out.gt += static_cast<long>(g.ids.size());
        out.matches += matched;
        out.fn += static_cast<long>(g.ids.size()) - matched;
        out.fp += static_cast<long>(p.ids.size()) - matched;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Identity metrics

double IdCounts::idf1() const {
    const long denom = 2 * idtp + idfp + idfn;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(idtp) / static_cast<double>(denom);
}

IdCounts& IdCounts::operator+=(const IdCounts& o) {
    idtp += o.idtp;
    idfp += o.idfp;
    idfn += o.idfn;
    return *this;
}

IdCounts id_metrics(const FrameSeries& gt, const FrameSeries& pred, double iou_threshold) {
    const auto g_ids = dense_ids(gt);
    const auto p_ids = dense_ids(pred);
    Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g_ids.size()),
                                                    static_cast<Eigen::Index>(p_ids.size()));
    long total_gt = 0;
    long total_pred = 0;
    const std::size_t frames = std::max(gt.size(), pred.size());
    for (std::size_t t = 0; t < frames; ++t) {
        const FrameBoxes& g = frame_at(gt, t);
        const FrameBoxes& p = frame_at(pred, t);
        total_gt += static_cast<long>(g.ids.size());
        total_pred += static_cast<long>(p.ids.size());
        for (std::size_t i = 0; i < g.ids.size(); ++i) {
            for (std::size_t j = 0; j < p.ids.size(); ++j) {
                if (iou(g.boxes[i], p.boxes[j]) >= iou_threshold) overlap(g_ids.at(g.ids[i]), p_ids.at(p.ids[j])) += 1.0;
            }
        }
    }
    long idtp = 0;
    for (const auto& [r, c] : solve_assignment(-overlap).pairs) idtp += static_cast<long>(overlap(r, c));
    return {idtp, total_pred - idtp, total_gt - idtp};
}

// ---------------------------------------------------------------------------
// HOTA

double hota_alpha(int index) { return 0.05 * (index + 1); }

double HotaCounts::det_a(int a) const {
    const double denom = tp[a] + fn[a] + fp[a];
    return denom > 0.0 ? tp[a] / denom : 1.0;
}

double HotaCounts::ass_a(int a) const {
    if (tp[a] + fn[a] + fp[a] == 0.0) return 1.0;
    return tp[a] > 0.0 ? assoc[a] / tp[a] : 0.0;
}

double HotaCounts::hota(int a) const { return std::sqrt(det_a(a) * ass_a(a)); }

double HotaCounts::hota() const {
    double s = 0.0;
    for (int a = 0; a < kHotaAlphaCount; ++a) s += hota(a);
    return s / kHotaAlphaCount;
}

double HotaCounts::det_a() const {
    double s = 0.0;
    for (int a = 0; a < kHotaAlphaCount; ++a) s += det_a(a);
    return s / kHotaAlphaCount;
}

double HotaCounts::ass_a() const {
    double s = 0.0;
    for (int a = 0; a < kHotaAlphaCount; ++a) s += ass_a(a);
    return s / kHotaAlphaCount;
}

HotaCounts& HotaCounts::operator+=(const HotaCounts& o) {
    for (int a = 0; a < kHotaAlphaCount; ++a) {
        tp[a] += o.tp[a];
        fn[a] += o.fn[a];
        fp[a] += o.fp[a];
        assoc[a] += o.assoc[a];
    }
    return *this;
}

HotaCounts hota(const FrameSeries& gt, const FrameSeries& pred) {
    const auto g_ids = dense_ids(gt);
    const auto p_ids = dense_ids(pred);
    const auto ng = static_cast<Eigen::Index>(g_ids.size());
    const auto np = static_cast<Eigen::Index>(p_ids.size());
    const std::size_t frames = std::max(gt.size(), pred.size());

    // Soft co-occurrence of every (gt, pred) trajectory pair.
    Eigen::VectorXd g_count = Eigen::VectorXd::Zero(ng);
    Eigen::VectorXd p_count = Eigen::VectorXd::Zero(np);
    Eigen::MatrixXd potential = Eigen::MatrixXd::Zero(ng, np);
    std::vector<Eigen::MatrixXd> sims(frames);
    long total_gt = 0;
    long total_pred = 0;
    for (std::size_t t = 0; t < frames; ++t) {
        const FrameBoxes& g = frame_at(gt, t);
        const FrameBoxes& p = frame_at(pred, t);
        total_gt += static_cast<long>(g.ids.size());
        total_pred += static_cast<long>(p.ids.size());
        sims[t] = iou_matrix(g, p);
        const Eigen::MatrixXd& s = sims[t];
        const Eigen::VectorXd row_sum = s.rowwise().sum();
        const Eigen::RowVectorXd col_sum = s.colwise().sum();
        for (std::size_t i = 0; i < g.ids.size(); ++i) {
            g_count[g_ids.at(g.ids[i])] += 1.0;
            for (std::size_t j = 0; j < p.ids.size(); ++j) {
                const auto ii = static_cast<Eigen::Index>(i);
                const auto jj = static_cast<Eigen::Index>(j);
                const double denom = row_sum[ii] + col_sum[jj] - s(ii, jj);
                if (denom > 0.0) potential(g_ids.at(g.ids[i]), p_ids.at(p.ids[j])) += s(ii, jj) / denom;
            }
        }
        for (int id : p.ids) p_count[p_ids.at(id)] += 1.0;
    }
    Eigen::MatrixXd alignment = Eigen::MatrixXd::Zero(ng, np);
    for (Eigen::Index i = 0; i < ng; ++i) {
        for (Eigen::Index j = 0; j < np; ++j) {
            const double denom = g_count[i] + p_count[j] - potential(i, j);
            if (denom > 0.0) alignment(i, j) = potential(i, j) / denom;
        }
    }

    HotaCounts out;
    for (int a = 0; a < kHotaAlphaCount; ++a) {
        const double alpha = hota_alpha(a) - 1e-12;
        Eigen::MatrixXd matches = Eigen::MatrixXd::Zero(ng, np);
        double tp = 0.0;
        for (std::size_t t = 0; t < frames; ++t) {
            const FrameBoxes& g = frame_at(gt, t);
            const FrameBoxes& p = frame_at(pred, t);
            const Eigen::MatrixXd& s = sims[t];
            if (s.size() == 0) continue;
            // Invalid pairs cost 0 rather than being forbidden, so the solver
            // maximizes total weight without forcing extra matches.
            Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(s.rows(), s.cols());
            for (Eigen::Index i = 0; i < s.rows(); ++i) {
                for (Eigen::Index j = 0; j < s.cols(); ++j) {
                    if (s(i, j) >= alpha) {
                        cost(i, j) = -alignment(g_ids.at(g.ids[static_cast<std::size_t>(i)]),
                                                p_ids.at(p.ids[static_cast<std::size_t>(j)])) * s(i, j);
                    }
                }
            }
            for (const auto& [i, j] : solve_assignment(cost).pairs) {
                if (s(i, j) < alpha) continue;
                matches(g_ids.at(g.ids[static_cast<std::size_t>(i)]), p_ids.at(p.ids[static_cast<std::size_t>(j)])) += 1.0;
                tp += 1.0;
            }
        }
        double assoc = 0.0;
        for (Eigen::Index i = 0; i < ng; ++i) {
            for (Eigen::Index j = 0; j < np; ++j) {
                const double m = matches(i, j);
                if (m > 0.0) assoc += m * m / (g_count[i] + p_count[j] - m);
            }
        }
        out.tp[a] = tp;
        out.fn[a] = static_cast<double>(total_gt) - tp;
        out.fp[a] = static_cast<double>(total_pred) - tp;
        out.assoc[a] = assoc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports

EvalCounts& EvalCounts::operator+=(const EvalCounts& o) {
    clear += o.clear;
    id += o.id;
    hota += o.hota;
    return *this;
}

EvalCounts evaluate(const FrameSeries& gt, const FrameSeries& pred, double iou_threshold) {
    return {clear_mot(gt, pred, iou_threshold), id_metrics(gt, pred, iou_threshold), hota(gt, pred)};
}

EvalResult summarize(const EvalCounts& c, std::string sequence, int k) {
    EvalResult r;
    r.sequence = std::move(sequence);
    r.k = k;
    r.mota = c.clear.gt > 0 ? c.clear.mota() : (c.clear.fp == 0 ? 1.0 : 0.0);
    r.idf1 = c.id.idf1();
    r.hota = c.hota.hota();
    r.det_a = c.hota.det_a();
    r.ass_a = c.hota.ass_a();
    r.fp = c.clear.fp;
    r.fn = c.clear.fn;
    r.idsw = c.clear.idsw;
    r.gt_boxes = c.clear.gt;
    return r;
}

AggregateResult aggregate(const std::vector<EvalResult>& per_k) {
    if (per_k.empty()) throw ValidationError("aggregate needs at least one frame rate");
    AggregateResult out;
    out.per_k = per_k;
    double hi = per_k.front().hota;
    double lo = hi;
    for (const auto& r : per_k) {
        out.mhota += r.hota;
        out.mmota += r.mota;
        out.midf1 += r.idf1;
        hi = std::max(hi, r.hota);
        lo = std::min(lo, r.hota);
    }
    const auto n = static_cast<double>(per_k.size());
    out.mhota /= n;
    out.mmota /= n;
    out.midf1 /= n;
    if (!(hi > 0.0)) throw ValidationError("VR is undefined when the best HOTA is 0");
    out.vr = (hi - lo) / hi;
    return out;
}

std::string AggregateResult::to_json() const {
    nlohmann::ordered_json j;
    j["mHOTA"] = mhota;
    j["mMOTA"] = mmota;
    j["mIDF1"] = midf1;
    j["VR"] = vr;
    auto& rows = j["per_k"] = nlohmann::ordered_json::array();
    for (const auto& r : per_k) {
        rows.push_back({{"k", r.k},
                        {"HOTA", r.hota},
                        {"DetA", r.det_a},
                        {"AssA", r.ass_a},
                        {"MOTA", r.mota},
                        {"IDF1", r.idf1},
                        {"FP", r.fp},
                        {"FN", r.fn},
                        {"IDSW", r.idsw},
                        {"GT", r.gt_boxes}});
    }
    return j.dump(2) + "\n";
}

std::string eval_csv(const std::vector<EvalResult>& rows) {
    std::ostringstream out;
    out << "sequence,k,metric,value\n";
    for (const auto& r : rows) {
        const std::pair<const char*, std::string> values[] = {
            {"HOTA", format_number(r.hota)}, {"DetA", format_number(r.det_a)}, {"AssA", format_number(r.ass_a)},
            {"MOTA", format_number(r.mota)}, {"IDF1", format_number(r.idf1)}, {"FP", std::to_string(r.fp)},
            {"FN", std::to_string(r.fn)},     {"IDSW", std::to_string(r.idsw)}};
        for (const auto& [name, v] : values) out << r.sequence << ',' << r.k << ',' << name << ',' << v << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Candidate analysis

std::vector<CandidateRow> candidate_curve(const std::vector<Sequence>& sequences, const std::vector<int>& k_set,
                                          const std::vector<double>& r_set) {
    for (double r : r_set) {
        if (!(r >= 1.0)) throw ValidationError("candidate_curve: r must be >= 1");
    }
    std::vector<CandidateRow> rows;
    for (int k : k_set) {
        std::vector<double> sums(r_set.size(), 0.0);
        long samples = 0;
        for (const auto& seq : sequences) {
            const double w = seq.width;
            const double h = seq.height;
            for (const auto& video : resample(seq, k)) {
                const auto frames = video.sequence.gt_by_frame();
                for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
                    const auto& cur = frames[t];
                    const auto& next = frames[t + 1];
                    for (const auto& e : cur) {
                        const auto same = std::find_if(next.begin(), next.end(),
                                                       [&](const GtEntry& n) { return n.identity == e.identity; });
                        if (same == next.end()) continue;
                        const double d_star = normalized_distance(e.box, same->box, w, h);
                        if (!(d_star > 0.0)) continue;
                        ++samples;
                        for (std::size_t ri = 0; ri < r_set.size(); ++ri) {
                            const double reach = r_set[ri] * d_star;
                            long count = 0;
                            for (const auto& n : next) {
                                if (normalized_distance(e.box, n.box, w, h) <= reach) ++count;
                            }
                            sums[ri] += static_cast<double>(count);
                        }
                    }
                }
            }
        }
        for (std::size_t ri = 0; ri < r_set.size(); ++ri) {
            rows.push_back({k, r_set[ri], samples > 0 ? sums[ri] / static_cast<double>(samples) : 0.0, samples});
        }
    }
    return rows;
}

std::vector<CandidateRow> candidate_curve(const Sequence& gt, const std::vector<int>& k_set,
                                          const std::vector<double>& r_set) {
    return candidate_curve(std::vector<Sequence>{gt}, k_set, r_set);
}

std::string candidate_csv(const std::vector<CandidateRow>& rows) {
    std::ostringstream out;
    out << "k,r,mean_candidates,samples\n";
    for (const auto& r : rows) {
        out << r.k << ',' << format_number(r.r) << ',' << format_number(r.mean_candidates) << ',' << r.samples << '\n';
    }
    return out.str();
}

}  // namespace framot
