#include "sif/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "sif/errors.hpp"
#include "sif/rng.hpp"

namespace sif {

namespace {

inline double activate(Activation act, double z) {
    switch (act) {
        case Activation::silu:
            return z / (1.0 + std::exp(-z));
        case Activation::gelu: {
            const double c = 0.7978845608028653558798921198687;  // sqrt(2/pi)
            const double u = c * (z + 0.044715 * z * z * z);
            return 0.5 * z * (1.0 + std::tanh(u));
        }
    }
    return z;
}

inline double activate_deriv(Activation act, double z) {
    switch (act) {
        case Activation::silu: {
            const double sg = 1.0 / (1.0 + std::exp(-z));
            return sg * (1.0 + z * (1.0 - sg));
        }
        case Activation::gelu: {
            const double c = 0.7978845608028653558798921198687;
            const double u = c * (z + 0.044715 * z * z * z);
            const double t = std::tanh(u);
            const double du = c * (1.0 + 3.0 * 0.044715 * z * z);
            return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * du;
        }
    }
    return 1.0;
}

}  // namespace

std::vector<int> MlpConfig::widths() const {
    std::vector<int> w;
    w.push_back(input);
    for (int h : hidden) w.push_back(h);
    w.push_back(output);
    return w;
}

NeuralDrift::NeuralDrift(MlpConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.input < 1 || cfg_.output < 1)
        throw std::invalid_argument("NeuralDrift: input/output widths must be positive");
    for (int h : cfg_.hidden)
        if (h < 1) throw std::invalid_argument("NeuralDrift: hidden width must be positive");
    widths_ = cfg_.widths();
    std::int64_t off = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        w_offset_.push_back(off);
        off += static_cast<std::int64_t>(widths_[l + 1]) * widths_[l];
        b_offset_.push_back(off);
        off += widths_[l + 1];
    }
    params_.assign(static_cast<std::size_t>(off), 0.0);
}

void NeuralDrift::init_params(std::uint64_t seed) {
    rng::Stream stream = rng::Stream::keyed(seed, 0x1717);
    const std::size_t layers = widths_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = widths_[l];
        const int out = widths_[l + 1];
        const double scale = (l + 1 == layers) ? 0.0 : 1.0 / std::sqrt((double)in);
        double* w = params_.data() + w_offset_[l];
        for (int i = 0; i < out * in; ++i) w[i] = scale * stream.normal();
        double* b = params_.data() + b_offset_[l];
        std::fill_n(b, out, 0.0);
    }
}

void NeuralDrift::eval_single(double s, std::span<const double> x,
                              std::span<const double> x0, std::span<double> out,
                              Scratch& scratch) const {
    const int d = cfg_.output;
    if (static_cast<int>(x.size()) != d || static_cast<int>(x0.size()) != d ||
        static_cast<int>(out.size()) != d || cfg_.input != 2 * d + 1)
        throw std::invalid_argument("NeuralDrift::eval_single: dimension mismatch");
    scratch.a.resize(widths_[0]);
    for (int i = 0; i < d; ++i) scratch.a[i] = x[i];
    for (int i = 0; i < d; ++i) scratch.a[d + i] = x0[i];
    scratch.a[2 * d] = s;

    const std::size_t layers = widths_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = widths_[l];
        const int wout = widths_[l + 1];
        scratch.b.resize(wout);
        const double* w = params_.data() + w_offset_[l];
        const double* bias = params_.data() + b_offset_[l];
        for (int i = 0; i < wout; ++i) {
            double acc = bias[i];
            const double* row = w + static_cast<std::int64_t>(i) * in;
            for (int j = 0; j < in; ++j) acc += row[j] * scratch.a[j];
            scratch.b[i] = (l + 1 == layers) ? acc : activate(cfg_.activation, acc);
        }
        std::swap(scratch.a, scratch.b);
    }
    std::copy_n(scratch.a.begin(), d, out.begin());
}

void NeuralDrift::forward_batch(std::span<const double> inputs, std::int64_t count,
                                BatchCache& cache, Exec exec) const {
    const std::size_t layers = widths_.size() - 1;
    if (static_cast<std::int64_t>(inputs.size()) != count * widths_[0])
        throw std::invalid_argument("forward_batch: input size mismatch");
    cache.count = count;
    cache.pre.resize(layers - 1);
    cache.act.resize(layers - 1);
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        cache.pre[l].resize(static_cast<std::size_t>(count) * widths_[l + 1]);
        cache.act[l].resize(static_cast<std::size_t>(count) * widths_[l + 1]);
    }
    cache.out.resize(static_cast<std::size_t>(count) * widths_.back());

    parallel_for(count, exec, [&](std::int64_t k) {
        const double* a = inputs.data() + k * widths_[0];
        for (std::size_t l = 0; l < layers; ++l) {
            const int in = widths_[l];
            const int wout = widths_[l + 1];
            const bool last = (l + 1 == layers);
            double* pre = last ? cache.out.data() + k * wout
                               : cache.pre[l].data() + k * wout;
            const double* w = params_.data() + w_offset_[l];
            const double* bias = params_.data() + b_offset_[l];
            for (int i = 0; i < wout; ++i) {
                double acc = bias[i];
                const double* row = w + static_cast<std::int64_t>(i) * in;
                for (int j = 0; j < in; ++j) acc += row[j] * a[j];
                pre[i] = acc;
            }
            if (!last) {
                double* act = cache.act[l].data() + k * wout;
                for (int i = 0; i < wout; ++i) act[i] = activate(cfg_.activation, pre[i]);
                a = act;
            }
        }
    });
}

void NeuralDrift::backward_batch(const BatchCache& cache, std::span<const double> inputs,
                                 std::span<const double> dloss_dout, std::span<double> grad,
                                 Exec exec) const {
    const std::size_t layers = widths_.size() - 1;
    const std::int64_t count = cache.count;
    if (static_cast<std::int64_t>(dloss_dout.size()) != count * widths_.back() ||
        grad.size() != params_.size())
        throw std::invalid_argument("backward_batch: size mismatch");

    std::vector<double> delta(dloss_dout.begin(), dloss_dout.end());
    std::vector<double> delta_prev;

    for (std::size_t li = layers; li-- > 0;) {
        const int in = widths_[li];
        const int wout = widths_[li + 1];
        const double* a_prev = (li == 0) ? inputs.data() : cache.act[li - 1].data();

        // Weight/bias gradient: per output row, accumulate over samples in
        // ascending order (thread-count independent).
        double* gw = grad.data() + w_offset_[li];
        double* gb = grad.data() + b_offset_[li];
        parallel_for(wout, exec, [&](std::int64_t i) {
            double* grow = gw + i * in;
            std::fill_n(grow, in, 0.0);
            double bsum = 0.0;
            for (std::int64_t k = 0; k < count; ++k) {
                const double dk = delta[k * wout + i];
                bsum += dk;
                const double* arow = a_prev + k * in;
                for (int j = 0; j < in; ++j) grow[j] += dk * arow[j];
            }
            gb[i] = bsum;
        });

        if (li == 0) break;

        // Backpropagate to the previous layer's pre-activations.
        const double* w = params_.data() + w_offset_[li];
        const double* pre_prev = cache.pre[li - 1].data();
        delta_prev.resize(static_cast<std::size_t>(count) * in);
        parallel_for(count, exec, [&](std::int64_t k) {
            const double* drow = delta.data() + k * wout;
            double* prow = delta_prev.data() + k * in;
            for (int j = 0; j < in; ++j) {
                double acc = 0.0;
                for (int i = 0; i < wout; ++i) acc += drow[i] * w[i * in + j];
                prow[j] = acc * activate_deriv(cfg_.activation, pre_prev[k * in + j]);
            }
        });
        std::swap(delta, delta_prev);
    }
}

void NeuralDriftField::eval(double s, std::span<const double> x,
                            std::span<const double> x0, std::span<double> out) const {
    thread_local NeuralDrift::Scratch scratch;
    net_->eval_single(s, x, x0, out, scratch);
}

double loss_gradient(const NeuralDrift& model, const Schedule& sched, PairsView batch,
                     std::span<const double> s_draws, std::span<const double> z_draws,
                     std::span<double> grad, Exec exec) {
    const std::int64_t n = batch.count;
    const int d = batch.dim;
    if (n < 1) throw std::invalid_argument("loss_gradient: empty batch");
    if (model.config().output != d || model.config().input != 2 * d + 1)
        throw std::invalid_argument("loss_gradient: model/batch dimension mismatch");

    const int in = model.config().input;
    std::vector<double> inputs(static_cast<std::size_t>(n) * in);
    std::vector<double> targets(static_cast<std::size_t>(n) * d);
    parallel_for(n, exec, [&](std::int64_t k) {
        std::vector<double> point(d), target(d);
        const auto x0 = batch.x0.subspan(k * d, d);
        const auto x1 = batch.x1.subspan(k * d, d);
        interpolate_into(sched, x0, x1, s_draws[k], z_draws.subspan(k * d, d), point,
                         target);
        double* row = inputs.data() + k * in;
        for (int i = 0; i < d; ++i) row[i] = point[i];
        for (int i = 0; i < d; ++i) row[d + i] = x0[i];
        row[2 * d] = s_draws[k];
        std::copy_n(target.begin(), d, targets.begin() + k * d);
    });

    NeuralDrift::BatchCache cache;
    model.forward_batch(inputs, n, cache, exec);

    std::vector<double> loss_terms(static_cast<std::size_t>(n));
    std::vector<double> dout(static_cast<std::size_t>(n) * d);
    const double inv_n = 1.0 / static_cast<double>(n);
    parallel_for(n, exec, [&](std::int64_t k) {
        double e = 0.0;
        for (int i = 0; i < d; ++i) {
            const double r = cache.out[k * d + i] - targets[k * d + i];
            dout[k * d + i] = 2.0 * inv_n * r;
            e += r * r;
        }
        loss_terms[static_cast<std::size_t>(k)] = e;
    });
    model.backward_batch(cache, inputs, dout, grad, exec);
    return pairwise_sum(loss_terms) * inv_n;
}

AdamW::AdamW(std::int64_t n, AdamWConfig cfg) : cfg_(cfg) {
    m_.assign(static_cast<std::size_t>(n), 0.0);
    v_.assign(static_cast<std::size_t>(n), 0.0);
}

void AdamW::step(std::span<double> params, std::span<const double> grad, double lr,
                 double weight_decay) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw std::invalid_argument("AdamW::step: size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + weight_decay * params[i]);
    }
}

void AdamW::restore(std::int64_t t, std::span<const double> m, std::span<const double> v) {
    if (m.size() != m_.size() || v.size() != v_.size())
        throw std::invalid_argument("AdamW::restore: size mismatch");
    t_ = t;
    std::copy(m.begin(), m.end(), m_.begin());
    std::copy(v.begin(), v.end(), v_.begin());
}

TrainResult train(NeuralDrift& model, const Schedule& sched, PairsView data,
                  const TrainConfig& cfg, Exec exec, TrainState* state, int epoch_limit) {
    if (data.count < 1) throw std::invalid_argument("train: empty dataset");
    if (cfg.batch < 1 || cfg.epochs < 1 || !(cfg.learning_rate > 0.0))
        throw std::invalid_argument("train: bad config");
    const int d = data.dim;

    // Deterministic 90/10 split on a seed-keyed permutation.
    std::vector<std::int64_t> order(static_cast<std::size_t>(data.count));
    std::iota(order.begin(), order.end(), 0);
    rng::Stream split_stream = rng::Stream::keyed(cfg.seed, 0x5317);
    split_stream.shuffle(std::span<std::int64_t>(order));
    std::int64_t n_val = static_cast<std::int64_t>(
        std::floor(cfg.validation_fraction * static_cast<double>(data.count)));
    if (data.count - n_val < 1) n_val = 0;
    const std::int64_t n_train = data.count - n_val;
    const auto train_idx = std::span<const std::int64_t>(order).first(n_train);
    const auto val_idx = std::span<const std::int64_t>(order).subspan(n_train);

    // Fixed validation draws so the curve is comparable across epochs.
    std::vector<double> val_x0(n_val * d), val_x1(n_val * d), val_s(n_val),
        val_z(n_val * d);
    {
        rng::Stream vs = rng::Stream::keyed(cfg.seed, 0x7a11);
        for (std::int64_t i = 0; i < n_val; ++i) {
            const std::int64_t k = val_idx[i];
            std::copy_n(data.x0.begin() + k * d, d, val_x0.begin() + i * d);
            std::copy_n(data.x1.begin() + k * d, d, val_x1.begin() + i * d);
            val_s[i] = vs.uniform();
            for (int c = 0; c < d; ++c) val_z[i * d + c] = vs.normal();
        }
    }

    TrainState local{AdamW(model.param_count()), 0};
    TrainState& st = state ? *state : local;

    std::vector<std::int64_t> epoch_order(train_idx.begin(), train_idx.end());
    std::vector<double> grad(model.param_count());
    std::vector<double> bx0, bx1, bs, bz;
    TrainResult result;

    const int stop_epoch =
        epoch_limit > 0 ? std::min(cfg.epochs, st.next_epoch + epoch_limit) : cfg.epochs;
    for (int epoch = st.next_epoch; epoch < stop_epoch; ++epoch) {
        const double lr =
            cfg.learning_rate * 0.5 *
            (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / cfg.epochs));
        rng::Stream estream = rng::Stream::keyed(cfg.seed, 0xe90c, epoch);
        epoch_order.assign(train_idx.begin(), train_idx.end());
        estream.shuffle(std::span<std::int64_t>(epoch_order));

        double loss_sum = 0.0;
        double gnorm_sum = 0.0;
        std::int64_t n_batches = 0;
        for (std::int64_t start = 0; start < n_train; start += cfg.batch) {
            const std::int64_t bn = std::min<std::int64_t>(cfg.batch, n_train - start);
            bx0.resize(bn * d);
            bx1.resize(bn * d);
            bs.resize(bn);
            bz.resize(bn * d);
            for (std::int64_t i = 0; i < bn; ++i) {
                const std::int64_t k = epoch_order[start + i];
                std::copy_n(data.x0.begin() + k * d, d, bx0.begin() + i * d);
                std::copy_n(data.x1.begin() + k * d, d, bx1.begin() + i * d);
                bs[i] = estream.uniform();
                for (int c = 0; c < d; ++c) bz[i * d + c] = estream.normal();
            }
            const PairsView batch{bx0, bx1, d, bn};
            const double loss = loss_gradient(model, sched, batch, bs, bz, grad, exec);
            if (!std::isfinite(loss))
                throw NumericError("train: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", step " +
                                   std::to_string(st.optimizer.steps_taken()) +
                                   ", lr=" + std::to_string(lr));
            st.optimizer.step(model.params(), grad, lr, cfg.weight_decay);
            loss_sum += loss;
            double g2 = 0.0;
            for (double g : grad) g2 += g * g;
            gnorm_sum += std::sqrt(g2);
            ++n_batches;
        }

        double val_loss = 0.0;
        if (n_val > 0) {
            NeuralDriftField field(model);
            val_loss = empirical_loss(sched, field, PairsView{val_x0, val_x1, d, n_val},
                                      val_s, val_z, exec);
        }
        result.history.push_back({epoch, lr, loss_sum / n_batches, val_loss,
                                  gnorm_sum / n_batches});
        st.next_epoch = epoch + 1;
    }
    return result;
}

namespace {

constexpr char kCkptMagic[8] = {'S', 'I', 'F', 'C', 'K', 'P', 'T', '\0'};
constexpr char kOptMagic[8] = {'S', 'I', 'F', 'O', 'P', 'T', '\0', '\0'};

template <class T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::invalid_argument("checkpoint: truncated file");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const NeuralDrift& model,
                     const Schedule& sched) {
    if (sched.kind() == ScheduleKind::custom_tabulated)
        throw std::invalid_argument(
            "save_checkpoint: tabulated schedules are not representable in the "
            "checkpoint header");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("save_checkpoint: cannot open " + path);
    out.write(kCkptMagic, 8);
    write_pod<std::uint32_t>(out, 1);  // version
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(model.config().activation));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(sched.kind()));
    write_pod<double>(out, sched.epsilon());
    const auto widths = model.config().widths();
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(widths.size()));
    for (int w : widths) write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    const auto p = model.params();
    out.write(reinterpret_cast<const char*>(p.data()),
              static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!out) throw std::invalid_argument("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCkptMagic, 8) != 0)
        throw std::invalid_argument("load_checkpoint: bad magic in " + path);
    const auto version = read_pod<std::uint32_t>(in);
    if (version != 1)
        throw std::invalid_argument("load_checkpoint: unsupported version " +
                                    std::to_string(version));
    const auto act = read_pod<std::uint32_t>(in);
    const auto sched_kind = read_pod<std::uint32_t>(in);
    const double epsilon = read_pod<double>(in);
    const auto n_widths = read_pod<std::uint32_t>(in);
    if (n_widths < 2 || n_widths > 64)
        throw std::invalid_argument("load_checkpoint: implausible layer count");
    std::vector<int> widths(n_widths);
    for (auto& w : widths) w = static_cast<int>(read_pod<std::uint32_t>(in));

    MlpConfig cfg;
    cfg.input = widths.front();
    cfg.output = widths.back();
    cfg.hidden.assign(widths.begin() + 1, widths.end() - 1);
    cfg.activation = static_cast<Activation>(act);
    NeuralDrift model(cfg);
    auto p = model.params();
    in.read(reinterpret_cast<char*>(p.data()),
            static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!in) throw std::invalid_argument("load_checkpoint: truncated parameters");

    Schedule sched = sched_kind == static_cast<std::uint32_t>(ScheduleKind::linear_beta)
                         ? Schedule::linear_beta(epsilon)
                         : Schedule::quadratic_beta(epsilon);
    if (sched_kind > 1)
        throw std::invalid_argument("load_checkpoint: unsupported schedule kind");
    return Checkpoint{std::move(model), std::move(sched)};
}

void save_train_state(const std::string& path, const TrainState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("save_train_state: cannot open " + path);
    out.write(kOptMagic, 8);
    write_pod<std::uint32_t>(out, 1);
    write_pod<std::int64_t>(out, state.optimizer.steps_taken());
    write_pod<std::int32_t>(out, state.next_epoch);
    const auto m = state.optimizer.moment1();
    const auto v = state.optimizer.moment2();
    write_pod<std::int64_t>(out, static_cast<std::int64_t>(m.size()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!out) throw std::invalid_argument("save_train_state: write failed");
}

TrainState load_train_state(const std::string& path, std::int64_t param_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("load_train_state: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kOptMagic, 8) != 0)
        throw std::invalid_argument("load_train_state: bad magic in " + path);
    if (read_pod<std::uint32_t>(in) != 1)
        throw std::invalid_argument("load_train_state: unsupported version");
    const auto t = read_pod<std::int64_t>(in);
    const auto next_epoch = read_pod<std::int32_t>(in);
    const auto n = read_pod<std::int64_t>(in);
    if (n != param_count)
        throw std::invalid_argument("load_train_state: parameter count mismatch");
    std::vector<double> m(n), v(n);
    in.read(reinterpret_cast<char*>(m.data()), n * sizeof(double));
    in.read(reinterpret_cast<char*>(v.data()), n * sizeof(double));
    if (!in) throw std::invalid_argument("load_train_state: truncated file");
    TrainState st{AdamW(param_count), next_epoch};
    st.optimizer.restore(t, m, v);
    return st;
}

}  // namespace sif
