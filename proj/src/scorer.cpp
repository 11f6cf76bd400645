#include "cforge/scorer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "cforge/error.hpp"
#include "cforge/rng.hpp"

namespace cforge {

namespace {

void check_shapes(const ScorerParams& p) {
    if (p.w1.rows != p.hidden || p.w1.cols != p.input_dim() || p.b1.size() != p.hidden ||
        p.w2.rows != p.n_verbs || p.w2.cols != p.hidden || p.b2.size() != p.n_verbs)
        throw DataError("scorer parameter shapes are inconsistent with the declared dimensions");
}

}  // namespace

double& ScorerParams::param(std::size_t flat) {
    if (flat < w1.size()) return w1.data[flat];
    flat -= w1.size();
    if (flat < b1.size()) return b1[flat];
    flat -= b1.size();
    if (flat < w2.size()) return w2.data[flat];
    flat -= w2.size();
    return b2[flat];
}

double ScorerParams::param(std::size_t flat) const {
    return const_cast<ScorerParams*>(this)->param(flat);
}

ScorerParams init_params(std::size_t d_v, std::size_t d_o, std::size_t hidden, std::size_t n_verbs,
                         std::uint64_t seed) {
    if (d_v == 0 || d_o == 0 || hidden == 0 || n_verbs == 0)
        throw DataError("scorer dimensions must be >= 1");
    ScorerParams p;
    p.d_v = d_v;
    p.d_o = d_o;
    p.hidden = hidden;
    p.n_verbs = n_verbs;
    p.w1 = Matrix(hidden, d_v + d_o);
    p.b1.assign(hidden, 0.0);
    p.w2 = Matrix(n_verbs, hidden);
    p.b2.assign(n_verbs, 0.0);

    Rng rng(seed);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(d_v + d_o));
    for (double& w : p.w1.data) w = rng.uniform(-bound1, bound1);
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (double& w : p.w2.data) w = rng.uniform(-bound2, bound2);
    return p;
}

OptimState init_optim(const ScorerParams& params, double learning_rate, double momentum) {
    if (learning_rate <= 0.0) throw DataError("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw DataError("momentum must lie in [0, 1)");
    OptimState opt;
    opt.learning_rate = learning_rate;
    opt.momentum = momentum;
    opt.velocity = params;
    std::fill(opt.velocity.w1.data.begin(), opt.velocity.w1.data.end(), 0.0);
    std::fill(opt.velocity.b1.begin(), opt.velocity.b1.end(), 0.0);
    std::fill(opt.velocity.w2.data.begin(), opt.velocity.w2.data.end(), 0.0);
    std::fill(opt.velocity.b2.begin(), opt.velocity.b2.end(), 0.0);
    return opt;
}

Matrix forward(const ScorerParams& params, const Matrix& features, ForwardTape* tape) {
    check_shapes(params);
    if (features.cols != params.input_dim())
        throw DataError("feature width does not match d_v + d_o");
    if (!features.all_finite()) throw NumericError("non-finite value in scorer input");

    const std::size_t batch = features.rows;
    Matrix pre(batch, params.hidden);
    Matrix hid(batch, params.hidden);
    Matrix logits(batch, params.n_verbs);

    for (std::size_t r = 0; r < batch; ++r) {
        const double* x = &features.data[r * features.cols];
        for (std::size_t j = 0; j < params.hidden; ++j) {
            double acc = params.b1[j];
            const double* w = &params.w1.data[j * params.w1.cols];
            for (std::size_t k = 0; k < features.cols; ++k) acc += w[k] * x[k];
            pre(r, j) = acc;
            hid(r, j) = acc > 0.0 ? acc : 0.0;
        }
        const double* h = &hid.data[r * params.hidden];
        for (std::size_t v = 0; v < params.n_verbs; ++v) {
            double acc = params.b2[v];
            const double* w = &params.w2.data[v * params.w2.cols];
            for (std::size_t j = 0; j < params.hidden; ++j) acc += w[j] * h[j];
            logits(r, v) = acc;
        }
    }

    if (tape) {
        tape->inputs = features;
        tape->pre_hidden = std::move(pre);
        tape->hidden = std::move(hid);
    }
    return logits;
}

ScorerParams backward(const ScorerParams& params, const ForwardTape& tape,
                      const Matrix& dloss_dlogits) {
    check_shapes(params);
    const std::size_t batch = tape.inputs.rows;
    if (dloss_dlogits.rows != batch || dloss_dlogits.cols != params.n_verbs ||
        tape.pre_hidden.rows != batch || tape.pre_hidden.cols != params.hidden)
        throw DataError("tape and upstream gradient shapes disagree");

    ScorerParams g;
    g.d_v = params.d_v;
    g.d_o = params.d_o;
    g.hidden = params.hidden;
    g.n_verbs = params.n_verbs;
    g.w1 = Matrix(params.hidden, params.input_dim());
    g.b1.assign(params.hidden, 0.0);
    g.w2 = Matrix(params.n_verbs, params.hidden);
    g.b2.assign(params.n_verbs, 0.0);

    std::vector<double> dpre(params.hidden);
    for (std::size_t r = 0; r < batch; ++r) {
        const double* up = &dloss_dlogits.data[r * params.n_verbs];
        const double* h = &tape.hidden.data[r * params.hidden];
        const double* x = &tape.inputs.data[r * tape.inputs.cols];

        for (std::size_t v = 0; v < params.n_verbs; ++v) {
            g.b2[v] += up[v];
            double* gw = &g.w2.data[v * params.hidden];
            for (std::size_t j = 0; j < params.hidden; ++j) gw[j] += up[v] * h[j];
        }
        for (std::size_t j = 0; j < params.hidden; ++j) {
            double acc = 0.0;
            for (std::size_t v = 0; v < params.n_verbs; ++v)
                acc += up[v] * params.w2(v, j);
            dpre[j] = tape.pre_hidden(r, j) > 0.0 ? acc : 0.0;
        }
        for (std::size_t j = 0; j < params.hidden; ++j) {
            if (dpre[j] == 0.0) continue;
            g.b1[j] += dpre[j];
            double* gw = &g.w1.data[j * g.w1.cols];
            for (std::size_t k = 0; k < tape.inputs.cols; ++k) gw[k] += dpre[j] * x[k];
        }
    }
    return g;
}

void sgd_step(ScorerParams& params, const ScorerParams& grads, OptimState& opt) {
    if (grads.n_params() != params.n_params() || opt.velocity.n_params() != params.n_params())
        throw DataError("gradient/velocity shapes do not match the parameters");
    const std::size_t n = params.n_params();
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(grads.param(i)))
            throw NumericError("non-finite gradient; aborting the update");
    for (std::size_t i = 0; i < n; ++i) {
        double& v = opt.velocity.param(i);
        v = opt.momentum * v - opt.learning_rate * grads.param(i);
        params.param(i) += v;
    }
}

double gradient_check(const ScorerParams& params, const Matrix& features, const LossFn& loss_fn,
                      std::size_t n_coords) {
    ForwardTape tape;
    const Matrix logits = forward(params, features, &tape);
    const auto [loss, dlogits] = loss_fn(logits);
    (void)loss;
    const ScorerParams analytic = backward(params, tape, dlogits);

    // Check the coordinates carrying the largest analytic gradients: central
    // differences at this step size resolve those well, while coordinates
    // whose gradient sits near zero only measure cancellation noise.
    const std::size_t total = params.n_params();
    n_coords = std::min(n_coords, total);
    std::vector<std::size_t> coords(total);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    std::partial_sort(coords.begin(), coords.begin() + static_cast<std::ptrdiff_t>(n_coords),
                      coords.end(), [&](std::size_t a, std::size_t b) {
                          const double ga = std::abs(analytic.param(a));
                          const double gb = std::abs(analytic.param(b));
                          if (ga != gb) return ga > gb;
                          return a < b;
                      });

    constexpr double kStep = 1e-6;
    ScorerParams probe = params;
    double worst = 0.0;
    for (std::size_t i = 0; i < n_coords; ++i) {
        const std::size_t c = coords[i];
        const double saved = probe.param(c);
        probe.param(c) = saved + kStep;
        const double up = loss_fn(forward(probe, features)).first;
        probe.param(c) = saved - kStep;
        const double down = loss_fn(forward(probe, features)).first;
        probe.param(c) = saved;

        const double numeric = (up - down) / (2.0 * kStep);
        const double exact = analytic.param(c);
        const double denom = std::max(1e-12, std::abs(exact) + std::abs(numeric));
        worst = std::max(worst, std::abs(exact - numeric) / denom);
    }
    return worst;
}

void nudge_from_relu_kink(ScorerParams& params, const Matrix& features, double margin) {
    // Per hidden unit, find a bias shift that clears all batch pre-activations
    // off the kink. Nine candidate shifts cover a window wider than the batch
    // can crowd for any realistic margin.
    ForwardTape tape;
    forward(params, features, &tape);
    for (std::size_t j = 0; j < params.hidden; ++j) {
        for (int step = 0; step <= 8; ++step) {
            const double shift = static_cast<double>(step) * margin;
            bool clear = true;
            for (std::size_t r = 0; r < tape.pre_hidden.rows && clear; ++r)
                clear = std::abs(tape.pre_hidden(r, j) + shift) >= margin;
            if (clear) {
                params.b1[j] += shift;
                break;
            }
            if (step == 8) throw NumericError("could not nudge pre-activations off the relu kink");
        }
    }
}

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}
void put_f64(std::ofstream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64s(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(8 * v.size()));
}

std::uint32_t get_u32(std::ifstream& in) {
    std::uint32_t v;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) throw DataError("truncated checkpoint");
    return v;
}
double get_f64(std::ifstream& in) {
    double v;
    if (!in.read(reinterpret_cast<char*>(&v), 8)) throw DataError("truncated checkpoint");
    return v;
}
void get_f64s(std::ifstream& in, std::vector<double>& v) {
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(8 * v.size())))
        throw DataError("truncated checkpoint");
}

constexpr char kMagic[4] = {'C', 'F', 'C', 'K'};

}  // namespace

void save_checkpoint(const ScorerParams& params, const OptimState& opt,
                     const std::filesystem::path& path) {
    check_shapes(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path.string());
    out.write(kMagic, 4);
    put_u32(out, 1);  // format_version
    put_u32(out, static_cast<std::uint32_t>(params.d_v));
    put_u32(out, static_cast<std::uint32_t>(params.d_o));
    put_u32(out, static_cast<std::uint32_t>(params.hidden));
    put_u32(out, static_cast<std::uint32_t>(params.n_verbs));
    for (const ScorerParams* block : {&params, &opt.velocity}) {
        put_f64s(out, block->w1.data);
        put_f64s(out, block->b1);
        put_f64s(out, block->w2.data);
        put_f64s(out, block->b2);
    }
    put_f64(out, opt.learning_rate);
    put_f64(out, opt.momentum);
    if (!out) throw DataError("write failure on checkpoint: " + path.string());
}

std::pair<ScorerParams, OptimState> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not a scorer checkpoint: " + path.string());
    if (get_u32(in) != 1) throw DataError("unsupported checkpoint format_version");

    ScorerParams p;
    p.d_v = get_u32(in);
    p.d_o = get_u32(in);
    p.hidden = get_u32(in);
    p.n_verbs = get_u32(in);
    OptimState opt;
    for (ScorerParams* block : {&p, &opt.velocity}) {
        block->d_v = p.d_v;
        block->d_o = p.d_o;
        block->hidden = p.hidden;
        block->n_verbs = p.n_verbs;
        block->w1 = Matrix(p.hidden, p.d_v + p.d_o);
        block->b1.assign(p.hidden, 0.0);
        block->w2 = Matrix(p.n_verbs, p.hidden);
        block->b2.assign(p.n_verbs, 0.0);
        get_f64s(in, block->w1.data);
        get_f64s(in, block->b1);
        get_f64s(in, block->w2.data);
        get_f64s(in, block->b2);
    }
    opt.learning_rate = get_f64(in);
    opt.momentum = get_f64(in);
    in.peek();
    if (!in.eof()) throw DataError("trailing bytes after checkpoint payload");
    return {std::move(p), std::move(opt)};
}

}  // namespace cforge
