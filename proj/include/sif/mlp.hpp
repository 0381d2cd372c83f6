#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sif/drift.hpp"
#include "sif/interpolant.hpp"
#include "sif/schedule.hpp"
#include "sif/threading.hpp"

namespace sif {

enum class Activation : std::uint32_t { silu = 0, gelu = 1 };

struct MlpConfig {
    int input = 0;
    int output = 0;
    std::vector<int> hidden;
    Activation activation = Activation::silu;

    std::vector<int> widths() const;
};

// Fully connected drift approximator taking [x | x0 | s] and returning a
// d-vector. Parameters live in one flat array (per layer: weight matrix
// row-major out x in, then bias). All gradients are exact reverse-mode.
class NeuralDrift {
public:
    explicit NeuralDrift(MlpConfig cfg);

    const MlpConfig& config() const noexcept { return cfg_; }
    int state_dim() const noexcept { return cfg_.output; }
    std::int64_t param_count() const noexcept { return static_cast<std::int64_t>(params_.size()); }
    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }

    // Fan-in scaled normal init; the last layer starts at zero so the initial
    // drift vanishes identically.
    void init_params(std::uint64_t seed);

    struct Scratch {
        std::vector<double> a;
        std::vector<double> b;
    };
    void eval_single(double s, std::span<const double> x, std::span<const double> x0,
                     std::span<double> out, Scratch& scratch) const;

    struct BatchCache {
        std::int64_t count = 0;
        std::vector<std::vector<double>> pre;  // hidden pre-activations
        std::vector<std::vector<double>> act;  // hidden activations
        std::vector<double> out;               // count x output
    };

    void forward_batch(std::span<const double> inputs, std::int64_t count,
                       BatchCache& cache, Exec exec) const;

    // dloss_dout is count x output; grad is filled (not accumulated) with the
    // exact gradient, laid out like params(). Accumulation over samples runs
    // in ascending sample order per coefficient, so results are independent of
    // the thread count.
    void backward_batch(const BatchCache& cache, std::span<const double> inputs,
                        std::span<const double> dloss_dout, std::span<double> grad,
                        Exec exec) const;

private:
    MlpConfig cfg_;
    std::vector<int> widths_;
    std::vector<std::int64_t> w_offset_;  // per layer: weight block start
    std::vector<std::int64_t> b_offset_;  // per layer: bias block start
    std::vector<double> params_;

    friend class NeuralDriftField;
};

// Thread-safe DriftField view over a trained network.
class NeuralDriftField final : public DriftField {
public:
    explicit NeuralDriftField(const NeuralDrift& net) : net_(&net) {}
    int dim() const noexcept override { return net_->state_dim(); }
    void eval(double s, std::span<const double> x, std::span<const double> x0,
              std::span<double> out) const override;

private:
    const NeuralDrift* net_;
};

// Empirical loss of the network on interpolant draws plus its exact parameter
// gradient. Returns the loss; grad must have param_count() entries.
double loss_gradient(const NeuralDrift& model, const Schedule& sched, PairsView batch,
                     std::span<const double> s_draws, std::span<const double> z_draws,
                     std::span<double> grad, Exec exec = Exec::parallel);

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with decoupled weight decay: the decay term never enters the moment
// estimates.
class AdamW {
public:
    AdamW(std::int64_t n, AdamWConfig cfg = {});

    void step(std::span<double> params, std::span<const double> grad, double lr,
              double weight_decay);

    std::int64_t steps_taken() const noexcept { return t_; }
    std::span<const double> moment1() const noexcept { return m_; }
    std::span<const double> moment2() const noexcept { return v_; }
    void restore(std::int64_t t, std::span<const double> m, std::span<const double> v);

private:
    AdamWConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

struct TrainConfig {
    std::int64_t batch = 512;
    int epochs = 100;
    double learning_rate = 1e-3;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    double validation_fraction = 0.1;
};

struct EpochRecord {
    int epoch;
    double lr;
    double train_loss;
    double val_loss;
    double grad_norm;  // mean L2 norm of minibatch gradients
};

struct TrainState {
    AdamW optimizer;
    int next_epoch = 0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
};

// Algorithm: shuffled minibatches, fresh (s, z) draws per sample visit,
// cosine learning-rate decay to zero over cfg.epochs. Fully determined by
// cfg.seed. Throws NumericError on a non-finite loss. Pass `state` to resume
// a run mid-schedule; it is updated in place. epoch_limit > 0 caps how many
// epochs this call processes without altering the cosine schedule, so a
// split run reproduces a continuous one exactly.
TrainResult train(NeuralDrift& model, const Schedule& sched, PairsView data,
                  const TrainConfig& cfg, Exec exec = Exec::parallel,
                  TrainState* state = nullptr, int epoch_limit = 0);

// Checkpoint format (see docs/formats.md): magic, version, activation id,
// schedule kind + epsilon, widths, then raw little-endian f64 parameters.
void save_checkpoint(const std::string& path, const NeuralDrift& model,
                     const Schedule& sched);

struct Checkpoint {
    NeuralDrift model;
    Schedule schedule;
};
Checkpoint load_checkpoint(const std::string& path);

// Optimizer sidecar for resumable training.
void save_train_state(const std::string& path, const TrainState& state);
TrainState load_train_state(const std::string& path, std::int64_t param_count);

}  // namespace sif
