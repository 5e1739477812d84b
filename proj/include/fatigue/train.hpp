#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fatigue/features.hpp"
#include "fatigue/model.hpp"

namespace fatigue::train {

struct Sample {
    std::vector<double> x;
    int label = 0;
};

struct TrainConfig {
    double lr = 5e-4;
    double weight_decay = 1e-3;
    int batch_size = 32;
    int max_epochs = 150;
    int patience = 20;
    double grad_clip = 1.0;
    std::uint64_t seed = 42;
    double lambda1 = 0.05;   // diversity weight
    double lambda2 = 0.001;  // sparsity weight
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double val_fraction = 0.2;
    bool freeze_tau = false;  // fixed-threshold ablation: tau gradient zeroed

    void validate() const;
};

struct LossBreakdown {
    double total = 0.0;
    double ce = 0.0;
    double diversity = 0.0;
    double sparsity = 0.0;
    double lambda1 = 0.05;
    double lambda2 = 0.001;
};

// ce: mean binary cross-entropy computed from logits (fused form).
// diversity: mean squared off-diagonal Pearson correlation among the four
// concept activations over the batch; a concept constant over the batch
// contributes correlation 0. sparsity: Shannon entropy of alpha (0 in
// no-logic mode, where alpha is unused).
LossBreakdown compute_loss(const std::vector<model::ForwardTrace>& traces,
                           const std::vector<int>& labels, const model::ModelParams& params,
                           double lambda1, double lambda2);

// Exact reverse-mode gradients of the composite loss for every parameter.
// Dropout masks recorded in the traces are reused. The returned object has
// the same tensor layout as `params`, holding gradients.
model::ModelParams backward(const model::ModelParams& params,
                            const std::vector<model::ForwardTrace>& traces,
                            const std::vector<int>& labels, double lambda1, double lambda2);

// Scales gradients so the global L2 norm is at most max_norm. Returns the
// pre-clip norm.
double clip_global_norm(model::ModelParams& grads, double max_norm);

// lr(epoch) = 0.5 * lr0 * (1 + cos(pi * epoch / max_epochs)), epoch 0-based.
double cosine_lr(int epoch, int max_epochs, double lr0);

class AdamW {
public:
    AdamW(const model::ModelParams& params, const TrainConfig& cfg);

    // Decoupled weight decay; decay is skipped for tensors flagged decay=false
    // (tau_hat, w_alpha, beta and all biases).
    void step(model::ModelParams& params, const model::ModelParams& grads, double lr);

private:
    model::ModelParams m_;
    model::ModelParams v_;
    long t_ = 0;
    TrainConfig cfg_;
};

struct EpochLog {
    int epoch = 0;  // 1-based
    double lr = 0.0;
    double train_total = 0.0;
    double train_ce = 0.0;
    double train_diversity = 0.0;
    double train_sparsity = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double max_abs_tau_grad = 0.0;  // max |applied tau gradient| this epoch
};

struct TrainResult {
    model::ModelParams best_params;
    std::vector<EpochLog> log;
    int best_epoch = 0;      // 1-based epoch of the returned parameters
    double best_val_loss = 0.0;
    double max_abs_tau_grad = 0.0;  // max over all steps
};

struct ModelSetup {
    model::ModelDims dims;
    fuzzy::OperatorFamily family = fuzzy::OperatorFamily::Product;
    bool no_logic = false;
    double dropout_rate = model::kDefaultDropout;
};

// AdamW + cosine annealing + early stopping (strict improvement, `patience`
// consecutive non-improving epochs). Deterministic given config.seed.
// Throws SingleClassTraining when the training set holds one class.
TrainResult train_model(const std::vector<Sample>& train_samples,
                        const std::vector<Sample>& val_samples, const TrainConfig& cfg,
                        const ModelSetup& setup);

// Subject-wise validation split when >= 4 subjects are present (about
// val_fraction of subjects, at least one), otherwise a stratified window
// split. Returns indices into `windows`.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_val(
    const std::vector<features::FeatureWindow>& windows, double val_fraction, std::uint64_t seed);

Sample to_sample(const features::FeatureWindow& w);

void write_train_log_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace fatigue::train
