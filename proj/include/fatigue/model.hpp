#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fatigue/common.hpp"
#include "fatigue/fuzzy.hpp"

namespace fatigue::model {

struct ModelDims {
    int d_eye = 42;
    int d_fnirs = 48;
    int hidden = 64;

    int d_total() const { return d_eye + d_fnirs; }
};

inline constexpr int kConcepts = 4;
inline constexpr int kRules = 3;
inline constexpr double kDefaultTemperature = 2.0;
inline constexpr double kDefaultDropout = 0.3;
inline constexpr double kLayerNormEps = 1e-5;

// One attention-gated encoder: a = sigmoid(W_a x), h = GELU(LN(W_h (x .* a))),
// then per-concept heads C_i = sigmoid(v_i . h + b_i).
struct EncoderParams {
    int d_in = 0;
    int hidden = 0;
    std::vector<double> W_a;      // d_in x d_in, row-major
    std::vector<double> W_h;      // hidden x d_in
    std::vector<double> ln_gain;  // hidden
    std::vector<double> ln_bias;  // hidden
    struct Head {
        std::vector<double> v;  // hidden
        double b = 0.0;
    };
    std::vector<Head> heads;
};

struct LogicParams {
    std::array<double, kConcepts> tau_hat{};   // thresholds via tau = sigmoid(tau_hat)
    double temperature = kDefaultTemperature;  // fixed, not trained
    std::array<double, kConcepts> w_alpha{};   // softmax logits for the R3 weights
    std::array<double, kRules> beta{1.0, 1.0, 1.0};
    std::array<double, kRules> agg_w{1.0, 1.0, 1.0};
    double agg_b = 0.0;
};

// Direct sigmoid head on the concepts, used by the no-logic ablation.
struct LinearHeadParams {
    std::array<double, kConcepts> u{};
    double c = 0.0;
};

struct ModelParams {
    ModelDims dims;
    fuzzy::OperatorFamily family = fuzzy::OperatorFamily::Product;
    bool no_logic = false;
    double dropout_rate = kDefaultDropout;

    EncoderParams eye;    // owns C1, C2
    EncoderParams fnirs;  // owns C3
    EncoderParams::Head multimodal;  // C4 head on [h_eye ; h_fnirs]
    LogicParams logic;
    LinearHeadParams linear_head;
};

// Flat view over every learnable tensor, in a stable order. `decay` marks
// tensors that receive weight decay (excluded: tau_hat, w_alpha, beta and all
// biases).
struct ParamRef {
    std::string name;
    double* data;
    std::size_t size;
    bool decay;
};

std::vector<ParamRef> param_refs(ModelParams& params);
std::size_t param_count(const ModelParams& params);
ModelParams zeros_like(const ModelParams& params);

ModelParams init_params(const ModelDims& dims, fuzzy::OperatorFamily family, std::uint64_t seed,
                        bool no_logic = false);

struct EncoderTrace {
    std::vector<double> x;
    std::vector<double> a_pre;   // W_a x
    std::vector<double> a;       // sigmoid(a_pre)
    std::vector<double> gated;   // x .* a
    std::vector<double> z;       // W_h gated
    double ln_mean = 0.0;
    double ln_inv_std = 0.0;
    std::vector<double> ln_xhat;  // (z - mean) * inv_std
    std::vector<double> ln_out;   // gain .* xhat + bias
    std::vector<double> h;        // GELU(ln_out)
    std::vector<double> drop_mask;  // inverted-dropout scales; empty in eval mode
    std::vector<double> h_drop;     // h after dropout (== h in eval mode)
};

struct ForwardTrace {
    EncoderTrace eye;
    EncoderTrace fnirs;
    std::array<double, kConcepts> concept_logits{};
    std::array<double, kConcepts> concepts{};    // C, after any knockout zeroing
    std::array<double, kConcepts> thresholds{};  // tau
    std::array<double, kConcepts> soft{};        // C-tilde
    std::array<double, kConcepts> alpha{};
    double conorm23 = 0.0;  // C2-tilde (+) C3-tilde
    std::array<double, kRules> firings{};
    double logit = 0.0;
    double yhat = 0.5;
};

double sigmoid(double x);
double gelu(double x);        // exact Gaussian-CDF form
double gelu_grad(double x);

// tau_i = sigmoid(tau_hat_i); soft_i = sigmoid((C_i - tau_i) * T)
std::array<double, kConcepts> soft_threshold(const std::array<double, kConcepts>& concepts,
                                             const std::array<double, kConcepts>& tau_hat,
                                             double temperature);

std::array<double, kConcepts> softmax4(const std::array<double, kConcepts>& logits);

// f1 = beta1*Ct1, f2 = beta2*(Ct2 (+) Ct3), f3 = beta3*sum(alpha_i Ct_i).
std::array<double, kRules> fire_rules(const std::array<double, kConcepts>& soft,
                                      const LogicParams& logic, fuzzy::OperatorFamily family);

double aggregate(const std::array<double, kRules>& firings, const LogicParams& logic);

// Full forward pass. `rng` is required when training is true (dropout).
// `knockout[i]` zeroes concept C_i before thresholding (inference ablation).
ForwardTrace forward(const ModelParams& params, const std::vector<double>& x, bool training,
                     Rng* rng, const std::array<bool, kConcepts>& knockout = {});

inline bool classify(double yhat) { return yhat >= 0.5; }  // ties go to fatigued

// Versioned JSON checkpoint with shape-tagged flat arrays.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace fatigue::model
