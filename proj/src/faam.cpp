#include "framot/faam.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "framot/assignment.hpp"
#include "framot/error.hpp"

namespace framot {

// ---------------------------------------------------------------------------
// Encoders

FrameRateEmbedding encode_known(double fps, double scale, int length) {
    if (!(fps > 0.0) || !std::isfinite(fps)) throw ValidationError("encode_known: frame rate must be positive");
    if (length < 1) throw ValidationError("encode_known: length must be >= 1");
    FrameRateEmbedding out{Eigen::VectorXd(length), RateSource::known};
    for (int i = 0; i < length; ++i) out.values[i] = std::cos(i * scale * fps / length);
    return out;
}

FrameRateEmbedding encode_blind(int length) {
    if (length < 1) throw ValidationError("encode_blind: length must be >= 1");
    return {Eigen::VectorXd::Zero(length), RateSource::none};
}

IbdvCriterion parse_ibdv_criterion(const std::string& name) {
    if (name == "dist") return IbdvCriterion::dist;
    if (name == "sim") return IbdvCriterion::sim;
    if (name == "random") return IbdvCriterion::random;
    throw ValidationError("unknown IBDV criterion '" + name + "' (expected dist, sim or random)");
}

const char* to_string(IbdvCriterion c) {
    switch (c) {
        case IbdvCriterion::dist: return "dist";
        case IbdvCriterion::sim: return "sim";
        case IbdvCriterion::random: return "random";
    }
    return "?";
}

Eigen::VectorXd interpolate_sorted(const std::vector<double>& v, int length) {
    if (length < 1) throw ValidationError("interpolate_sorted: length must be >= 1");
    if (v.empty()) return Eigen::VectorXd::Ones(length);
    Eigen::VectorXd out(length);
    if (v.size() == 1) {
        out.setConstant(v.front());
        return out;
    }
    const double last = static_cast<double>(v.size() - 1);
    for (int i = 0; i < length; ++i) {
        const double pos = length == 1 ? 0.0 : i * last / (length - 1);
        const auto lo = std::min(static_cast<std::size_t>(pos), v.size() - 2);
        const double t = pos - static_cast<double>(lo);
        out[i] = v[lo] + t * (v[lo + 1] - v[lo]);
    }
    return out;
}

FrameRateEmbedding encode_ibdv(const FrameDetections& previous, const FrameDetections& current,
                               IbdvCriterion criterion, int length, double image_width, double image_height,
                               std::uint64_t seed) {
    if (length < 1) throw ValidationError("encode_ibdv: length must be >= 1");
    const std::size_t n = previous.size();
    const std::size_t m = current.size();
    std::vector<double> distances;
    auto dist = [&](std::size_t i, std::size_t j) {
        return normalized_distance(previous.detections[i].box, current.detections[j].box, image_width, image_height);
    };

    if (n > 0 && m > 0) {
        if (criterion == IbdvCriterion::random) {
            std::mt19937_64 rng(seed);
            std::vector<std::size_t> perm(std::max(n, m));
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            for (std::size_t t = 0; t < std::min(n, m); ++t) {
                distances.push_back(n <= m ? dist(t, perm[t]) : dist(perm[t], t));
            }
        } else {
            Eigen::MatrixXd cost(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        criterion == IbdvCriterion::dist
                            ? dist(i, j)
                            : -cosine_similarity(previous.embeddings[i], current.embeddings[j]);
                }
            }
            for (const auto& [i, j] : solve_assignment(cost).pairs) {
                distances.push_back(dist(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
            }
        }
    }
    std::sort(distances.begin(), distances.end());
    return {interpolate_sorted(distances, length), RateSource::ibdv};
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

DenseLayer glorot_layer(int in, int out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer l{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (int r = 0; r < out; ++r) {
        for (int c = 0; c < in; ++c) l.weight(r, c) = u(rng);
    }
    return l;
}

template <typename Fn>
void for_each_tensor(FaamParams& p, Fn&& fn) {
    for (auto* stack : {&p.affinity, &p.attention}) {
        for (auto& l : *stack) {
            fn(l.weight.data(), static_cast<std::size_t>(l.weight.size()), l.weight.rows(), l.weight.cols());
            fn(l.bias.data(), static_cast<std::size_t>(l.bias.size()), l.bias.rows(), Eigen::Index{1});
        }
    }
}

template <typename Fn>
void for_each_tensor(const FaamParams& p, Fn&& fn) {
    for_each_tensor(const_cast<FaamParams&>(p), [&](double* data, std::size_t n, Eigen::Index r, Eigen::Index c) {
        fn(static_cast<const double*>(data), n, r, c);
    });
}

}  // namespace

FaamParams FaamParams::init(const FaamShape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FaamParams p;
    int in = shape.affinity_dim;
    for (int h : shape.affinity_hidden) {
        p.affinity.push_back(glorot_layer(in, h, rng));
        in = h;
    }
    p.affinity.push_back(glorot_layer(in, shape.channels, rng));
    in = shape.embedding_length;
    for (int h : shape.attention_hidden) {
        p.attention.push_back(glorot_layer(in, h, rng));
        in = h;
    }
    p.attention.push_back(glorot_layer(in, shape.channels, rng));
    return p;
}

std::size_t FaamParams::parameter_count() const {
    std::size_t n = 0;
    for_each_tensor(*this, [&](const double*, std::size_t size, Eigen::Index, Eigen::Index) { n += size; });
    return n;
}

// Weights are flattened row-major to match the checkpoint layout.
std::vector<double> FaamParams::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto* stack : {&affinity, &attention}) {
        for (const auto& l : *stack) {
            for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
                for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
            }
            for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias[r]);
        }
    }
    return out;
}

void FaamParams::assign(const std::vector<double>& flat) {
    if (flat.size() != parameter_count()) throw ValidationError("FaamParams::assign: size mismatch");
    std::size_t k = 0;
    for (auto* stack : {&affinity, &attention}) {
        for (auto& l : *stack) {
            for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
                for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
            }
            for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = flat[k++];
        }
    }
}

double& FaamParams::parameter(std::size_t index) {
    for (auto* stack : {&affinity, &attention}) {
        for (auto& l : *stack) {
            const auto nw = static_cast<std::size_t>(l.weight.size());
            if (index < nw) {
                const auto cols = static_cast<std::size_t>(l.weight.cols());
                return l.weight(static_cast<Eigen::Index>(index / cols), static_cast<Eigen::Index>(index % cols));
            }
            index -= nw;
            const auto nb = static_cast<std::size_t>(l.bias.size());
            if (index < nb) return l.bias[static_cast<Eigen::Index>(index)];
            index -= nb;
        }
    }
    throw ValidationError("FaamParams::parameter: index out of range");
}

FaamParams FaamParams::zeros_like() const {
    FaamParams z = *this;
    for_each_tensor(z, [](double* d, std::size_t n, Eigen::Index, Eigen::Index) { std::fill(d, d + n, 0.0); });
    return z;
}

void FaamParams::axpy(double alpha, const FaamParams& other) {
    for (std::size_t i = 0; i < affinity.size(); ++i) {
        affinity[i].weight += alpha * other.affinity[i].weight;
        affinity[i].bias += alpha * other.affinity[i].bias;
    }
    for (std::size_t i = 0; i < attention.size(); ++i) {
        attention[i].weight += alpha * other.attention[i].weight;
        attention[i].bias += alpha * other.attention[i].bias;
    }
}

bool operator==(const FaamParams& a, const FaamParams& b) { return a.flatten() == b.flatten(); }

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

void check_shapes(const AffinityMatrix& z, const FrameRateEmbedding& sigma, const FaamParams& params) {
    if (params.affinity.empty() || params.attention.empty()) throw ValidationError("FAAM parameters are empty");
    if (params.affinity.front().weight.cols() != kAffinityDim) {
        throw ValidationError("FAAM affinity input size does not match D_a");
    }
    if (sigma.values.size() != params.attention.front().weight.cols()) {
        throw ValidationError("frame-rate embedding length " + std::to_string(sigma.values.size()) +
                              " does not match the attention input size " +
                              std::to_string(params.attention.front().weight.cols()));
    }
    if (params.affinity.back().weight.rows() != params.attention.back().weight.rows()) {
        throw ValidationError("FAAM branch output sizes differ");
    }
    if (!z.features.allFinite() || !sigma.values.allFinite()) throw ValidationError("FAAM input is not finite");
}

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
    const Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp().matrix();
    return e / e.sum();
}

double logistic(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

FaamForward faam_forward(const AffinityMatrix& z, const FrameRateEmbedding& sigma, const FaamParams& params) {
    check_shapes(z, sigma, params);
    FaamForward f;
    f.input = z.features.transpose();

    Eigen::MatrixXd x = f.input;
    for (std::size_t l = 0; l < params.affinity.size(); ++l) {
        const auto& layer = params.affinity[l];
        Eigen::MatrixXd pre = layer.weight * x;
        pre.colwise() += layer.bias;
        const bool hidden = l + 1 < params.affinity.size();
        x = hidden ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : pre;
        f.affinity_pre.push_back(std::move(pre));
        f.affinity_act.push_back(x);
    }

    Eigen::VectorXd s = sigma.values;
    for (std::size_t l = 0; l < params.attention.size(); ++l) {
        const auto& layer = params.attention[l];
        Eigen::VectorXd pre = layer.weight * s + layer.bias;
        const bool hidden = l + 1 < params.attention.size();
        s = hidden ? Eigen::VectorXd(pre.cwiseMax(0.0)) : pre;
        f.attention_pre.push_back(std::move(pre));
        f.attention_act.push_back(s);
    }
    f.attention = softmax(s);

    f.raw = x.transpose() * f.attention;
    f.scores.resize(z.rows, z.cols);
    for (Eigen::Index p = 0; p < f.raw.size(); ++p) f.scores(p / z.cols, p % z.cols) = logistic(f.raw[p]);
    return f;
}

Eigen::MatrixXd faam_scores(const AffinityMatrix& z, const FrameRateEmbedding& sigma, const FaamParams& params) {
    check_shapes(z, sigma, params);
    if (z.pairs() == 0) return Eigen::MatrixXd(z.rows, z.cols);

    Eigen::VectorXd s = sigma.values;
    for (std::size_t l = 0; l < params.attention.size(); ++l) {
        s = params.attention[l].weight * s + params.attention[l].bias;
        if (l + 1 < params.attention.size()) s = s.cwiseMax(0.0);
    }
    const Eigen::VectorXd w = softmax(s);

    Eigen::MatrixXd x = z.features.transpose();
    for (std::size_t l = 0; l < params.affinity.size(); ++l) {
        Eigen::MatrixXd pre = params.affinity[l].weight * x;
        pre.colwise() += params.affinity[l].bias;
        x = l + 1 < params.affinity.size() ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : std::move(pre);
    }
    const Eigen::VectorXd raw = x.transpose() * w;
    Eigen::MatrixXd scores(z.rows, z.cols);
    for (Eigen::Index p = 0; p < raw.size(); ++p) scores(p / z.cols, p % z.cols) = logistic(raw[p]);
    return scores;
}

LossAndGradient faam_loss_and_gradient(const AffinityMatrix& z, const FrameRateEmbedding& sigma,
                                       const PairLabels& labels, const FaamParams& params, double beta) {
    if (labels.label.rows() != z.rows || labels.label.cols() != z.cols || labels.mask.rows() != z.rows ||
        labels.mask.cols() != z.cols) {
        throw ValidationError("label matrix shape does not match the affinity matrix");
    }
    LossAndGradient out;
    out.gradient = params.zeros_like();
    const double counted = labels.mask.sum();
    if (counted <= 0.0) return out;
    out.counted_pairs = static_cast<std::size_t>(counted);

    const FaamForward f = faam_forward(z, sigma, params);
    const Eigen::Index pairs = z.pairs();

    // dL/draw for every pair.
    Eigen::VectorXd d_raw(pairs);
    double loss = 0.0;
    for (Eigen::Index p = 0; p < pairs; ++p) {
        const Eigen::Index i = p / z.cols;
        const Eigen::Index j = p % z.cols;
        const double m = labels.mask(i, j);
        const double y = labels.label(i, j);
        const double r = f.raw[p];
        loss += m * (softplus(r) - y * r);
        d_raw[p] = m * (logistic(r) - y);
    }
    const double scale = beta / counted;
    out.loss = scale * loss;
    d_raw *= scale;

    // raw = f_aff^T * w
    const Eigen::MatrixXd& f_aff = f.affinity_act.back();
    Eigen::MatrixXd d_x = f.attention * d_raw.transpose();  // channels x pairs
    const Eigen::VectorXd d_w = f_aff * d_raw;
    Eigen::VectorXd d_s = f.attention.cwiseProduct((d_w.array() - f.attention.dot(d_w)).matrix());

    for (std::size_t l = params.affinity.size(); l-- > 0;) {
        if (l + 1 < params.affinity.size()) d_x = d_x.cwiseProduct((f.affinity_pre[l].array() > 0.0).cast<double>().matrix());
        const Eigen::MatrixXd& in = l == 0 ? f.input : f.affinity_act[l - 1];
        out.gradient.affinity[l].weight = d_x * in.transpose();
        out.gradient.affinity[l].bias = d_x.rowwise().sum();
        if (l > 0) d_x = params.affinity[l].weight.transpose() * d_x;
    }

    for (std::size_t l = params.attention.size(); l-- > 0;) {
        if (l + 1 < params.attention.size()) {
            d_s = d_s.cwiseProduct((f.attention_pre[l].array() > 0.0).cast<double>().matrix());
        }
        const Eigen::VectorXd& in = l == 0 ? sigma.values : f.attention_act[l - 1];
        out.gradient.attention[l].weight = d_s * in.transpose();
        out.gradient.attention[l].bias = d_s;
        if (l > 0) d_s = params.attention[l].weight.transpose() * d_s;
    }
    return out;
}

double train_step(const AffinityMatrix& z, const FrameRateEmbedding& sigma, const PairLabels& labels,
                  FaamParams& params, double learning_rate, double beta) {
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
    LossAndGradient g = faam_loss_and_gradient(z, sigma, labels, params, beta);
    if (g.counted_pairs == 0) return 0.0;
    params.axpy(-learning_rate, g.gradient);
    return g.loss;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::array<char, 8> kFaamMagic{'F', 'A', 'A', 'M', '0', '0', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &d, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
public:
    Reader(const std::string& data, std::string name) : data_(data), name_(std::move(name)) {}

    std::uint64_t uint(int bytes) {
        if (pos_ + static_cast<std::size_t>(bytes) > data_.size()) throw ParseError(name_ + ": truncated checkpoint");
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(bytes);
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
    double f64() {
        const std::uint64_t bits = uint(8);
        double d = 0.0;
        std::memcpy(&d, &bits, sizeof d);
        return d;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    const std::string& data_;
    std::string name_;
    std::size_t pos_ = 8;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const FaamParams& params) {
    std::string out(kFaamMagic.begin(), kFaamMagic.end());
    put_u32(out, static_cast<std::uint32_t>(params.affinity.front().weight.cols()));
    put_u32(out, static_cast<std::uint32_t>(params.embedding_length()));
    put_u32(out, static_cast<std::uint32_t>(params.affinity.size()));
    put_u32(out, static_cast<std::uint32_t>(params.attention.size()));
    for (const auto* stack : {&params.affinity, &params.attention}) {
        for (const auto& l : *stack) {
            put_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
            put_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
        }
    }
    for (double v : params.flatten()) put_f64(out, v);
    write_file(path, out);
}

FaamParams load_checkpoint(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    if (data.size() < 8 || !std::equal(kFaamMagic.begin(), kFaamMagic.end(), data.begin())) {
        throw ParseError(path.string() + ": not a FAAM checkpoint");
    }
    Reader in(data, path.string());
    const std::uint32_t d_a = in.u32();
    const std::uint32_t d_sigma = in.u32();
    const std::uint32_t n_aff = in.u32();
    const std::uint32_t n_att = in.u32();
    if (d_a != kAffinityDim || n_aff == 0 || n_att == 0 || n_aff > 64 || n_att > 64) {
        throw ParseError(path.string() + ": unsupported checkpoint layout");
    }
    FaamParams p;
    auto read_shapes = [&](std::vector<DenseLayer>& stack, std::uint32_t count, std::uint32_t first_in) {
        std::uint32_t expected_in = first_in;
        for (std::uint32_t i = 0; i < count; ++i) {
            const std::uint32_t in_size = in.u32();
            const std::uint32_t out_size = in.u32();
            if (in_size != expected_in || out_size == 0 || out_size > 1u << 16) {
                throw ParseError(path.string() + ": inconsistent layer shapes");
            }
            stack.push_back({Eigen::MatrixXd::Zero(out_size, in_size), Eigen::VectorXd::Zero(out_size)});
            expected_in = out_size;
        }
    };
    read_shapes(p.affinity, n_aff, d_a);
    read_shapes(p.attention, n_att, d_sigma);
    if (p.affinity.back().weight.rows() != p.attention.back().weight.rows()) {
        throw ParseError(path.string() + ": branch output sizes differ");
    }
    std::vector<double> flat(p.parameter_count());
    for (auto& v : flat) v = in.f64();
    if (!in.done()) throw ParseError(path.string() + ": trailing bytes in checkpoint");
    p.assign(flat);
    return p;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd trivial_score(const AffinityMatrix& z, const TrivialAssociation& weights) {
    Eigen::MatrixXd out(z.rows, z.cols);
    for (Eigen::Index p = 0; p < z.pairs(); ++p) {
        const auto r = z.features.row(p);
        out(p / z.cols, p % z.cols) = weights.w_iou * r[1] + weights.w_sim * 0.5 * (r[2] + 1.0);
    }
    return out;
}

Eigen::MatrixXd score_pairs(const AssociationModel& model, const AffinityMatrix& z, const FrameRateEmbedding& sigma) {
    if (const auto* trivial = std::get_if<TrivialAssociation>(&model)) return trivial_score(z, *trivial);
    return faam_scores(z, sigma, std::get<FaamParams>(model));
}

}  // namespace framot
