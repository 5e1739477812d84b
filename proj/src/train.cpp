#include "fatigue/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

namespace fatigue::train {

using model::ForwardTrace;
using model::kConcepts;
using model::kRules;
using model::ModelParams;

void TrainConfig::validate() const {
    require(lr > 0.0 && weight_decay >= 0.0 && batch_size >= 1 && max_epochs >= 1 &&
                patience >= 1 && grad_clip > 0.0,
            ErrorCode::ConfigError, "training hyperparameters must be positive");
    require(patience < max_epochs, ErrorCode::ConfigError, "patience must be < max_epochs");
    require(val_fraction > 0.0 && val_fraction < 1.0, ErrorCode::ConfigError,
            "val_fraction must be in (0,1)");
}

namespace {

double bce_from_logit(double logit, int label) {
    // max(l,0) - l*y + log(1 + exp(-|l|)); stable for large |l|.
    double y = static_cast<double>(label);
    return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::fabs(logit)));
}

struct PairCorr {
    double r = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    bool degenerate = true;
};

PairCorr concept_pair_corr(const std::vector<ForwardTrace>& traces, int i, int j,
                           const std::array<double, kConcepts>& means) {
    PairCorr pc;
    double sab = 0.0;
    for (const auto& tr : traces) {
        double a = tr.concepts[static_cast<std::size_t>(i)] - means[static_cast<std::size_t>(i)];
        double b = tr.concepts[static_cast<std::size_t>(j)] - means[static_cast<std::size_t>(j)];
        pc.saa += a * a;
        pc.sbb += b * b;
        sab += a * b;
    }
    if (pc.saa < 1e-24 || pc.sbb < 1e-24) return pc;  // constant concept: r = 0
    pc.r = sab / std::sqrt(pc.saa * pc.sbb);
    pc.degenerate = false;
    return pc;
}

std::array<double, kConcepts> concept_means(const std::vector<ForwardTrace>& traces) {
    std::array<double, kConcepts> m{};
    for (const auto& tr : traces)
        for (int i = 0; i < kConcepts; ++i)
            m[static_cast<std::size_t>(i)] += tr.concepts[static_cast<std::size_t>(i)];
    for (double& v : m) v /= static_cast<double>(traces.size());
    return m;
}

double alpha_entropy(const std::array<double, kConcepts>& alpha) {
    double h = 0.0;
    for (double a : alpha) {
        if (a > 0.0) h -= a * std::log(a);
    }
    return h;
}

}  // namespace

LossBreakdown compute_loss(const std::vector<ForwardTrace>& traces, const std::vector<int>& labels,
                           const ModelParams& params, double lambda1, double lambda2) {
    require(!traces.empty() && traces.size() == labels.size(), ErrorCode::MissingTrace,
            "loss needs a non-empty trace batch matching the labels");

    LossBreakdown out;
    out.lambda1 = lambda1;
    out.lambda2 = lambda2;

    for (std::size_t n = 0; n < traces.size(); ++n)
        out.ce += bce_from_logit(traces[n].logit, labels[n]);
    out.ce /= static_cast<double>(traces.size());

    if (traces.size() >= 2) {
        auto means = concept_means(traces);
        double sum = 0.0;
        int pairs = 0;
        for (int i = 0; i < kConcepts; ++i) {
            for (int j = i + 1; j < kConcepts; ++j) {
                auto pc = concept_pair_corr(traces, i, j, means);
                sum += pc.r * pc.r;
                ++pairs;
            }
        }
        out.diversity = sum / static_cast<double>(pairs);
    }

    if (!params.no_logic) out.sparsity = alpha_entropy(model::softmax4(params.logic.w_alpha));

    out.total = out.ce + lambda1 * out.diversity + lambda2 * out.sparsity;
    return out;
}

ModelParams backward(const ModelParams& params, const std::vector<ForwardTrace>& traces,
                     const std::vector<int>& labels, double lambda1, double lambda2) {
    require(!traces.empty() && traces.size() == labels.size(), ErrorCode::MissingTrace,
            "backward needs traces matching labels");
    const auto batch = static_cast<double>(traces.size());
    const int hidden = params.dims.hidden;
    auto hs = static_cast<std::size_t>(hidden);

    ModelParams grads = model::zeros_like(params);

    // dL/dC_i,n accumulates the classification path plus the diversity term.
    std::vector<std::array<double, kConcepts>> d_concepts(traces.size());
    for (auto& d : d_concepts) d.fill(0.0);

    std::array<double, kConcepts> d_alpha{};
    const auto alpha = model::softmax4(params.logic.w_alpha);
    const double temperature = params.logic.temperature;

    for (std::size_t n = 0; n < traces.size(); ++n) {
        const auto& tr = traces[n];
        double d_logit = (model::sigmoid(tr.logit) - static_cast<double>(labels[n])) / batch;

        if (params.no_logic) {
            grads.linear_head.c += d_logit;
            for (int i = 0; i < kConcepts; ++i) {
                auto ii = static_cast<std::size_t>(i);
                grads.linear_head.u[ii] += d_logit * tr.concepts[ii];
                d_concepts[n][ii] += d_logit * params.linear_head.u[ii];
            }
            continue;
        }

        grads.logic.agg_b += d_logit;
        std::array<double, kRules> d_f{};
        for (int j = 0; j < kRules; ++j) {
            auto jj = static_cast<std::size_t>(j);
            grads.logic.agg_w[jj] += d_logit * tr.firings[jj];
            d_f[jj] = d_logit * params.logic.agg_w[jj];
        }

        std::array<double, kConcepts> d_soft{};

        // R1
        grads.logic.beta[0] += d_f[0] * tr.soft[0];
        d_soft[0] += d_f[0] * params.logic.beta[0];

        // R2 through the t-conorm
        grads.logic.beta[1] += d_f[1] * tr.conorm23;
        double d_conorm = d_f[1] * params.logic.beta[1];
        auto pd = fuzzy::t_conorm_grad(tr.soft[1], tr.soft[2], params.family);
        d_soft[1] += d_conorm * pd.da;
        d_soft[2] += d_conorm * pd.db;

        // R3 weighted evidence
        double weighted = 0.0;
        for (int i = 0; i < kConcepts; ++i)
            weighted += alpha[static_cast<std::size_t>(i)] * tr.soft[static_cast<std::size_t>(i)];
        grads.logic.beta[2] += d_f[2] * weighted;
        double d_weighted = d_f[2] * params.logic.beta[2];
        for (int i = 0; i < kConcepts; ++i) {
            auto ii = static_cast<std::size_t>(i);
            d_soft[ii] += d_weighted * alpha[ii];
            d_alpha[ii] += d_weighted * tr.soft[ii];
        }

        // Soft threshold: soft = sigmoid(T * (C - tau)), tau = sigmoid(tau_hat).
        for (int i = 0; i < kConcepts; ++i) {
            auto ii = static_cast<std::size_t>(i);
            double sig_grad = tr.soft[ii] * (1.0 - tr.soft[ii]);
            d_concepts[n][ii] += d_soft[ii] * sig_grad * temperature;
            double tau = tr.thresholds[ii];
            grads.logic.tau_hat[ii] +=
                d_soft[ii] * sig_grad * (-temperature) * tau * (1.0 - tau);
        }
    }

    if (!params.no_logic) {
        // Softmax Jacobian for the R3 path.
        double dot = 0.0;
        for (int i = 0; i < kConcepts; ++i)
            dot += d_alpha[static_cast<std::size_t>(i)] * alpha[static_cast<std::size_t>(i)];
        for (int k = 0; k < kConcepts; ++k) {
            auto kk = static_cast<std::size_t>(k);
            grads.logic.w_alpha[kk] += alpha[kk] * (d_alpha[kk] - dot);
        }
        // Sparsity: d H(alpha) / d w_k = -alpha_k (ln alpha_k + H).
        double entropy = alpha_entropy(alpha);
        for (int k = 0; k < kConcepts; ++k) {
            auto kk = static_cast<std::size_t>(k);
            if (alpha[kk] > 0.0)
                grads.logic.w_alpha[kk] +=
                    lambda2 * (-alpha[kk] * (std::log(alpha[kk]) + entropy));
        }
    }

    // Diversity term: mean over pairs of squared Pearson correlation of the
    // concept activations across the batch.
    if (traces.size() >= 2 && lambda1 != 0.0) {
        auto means = concept_means(traces);
        constexpr int kPairs = kConcepts * (kConcepts - 1) / 2;
        for (int i = 0; i < kConcepts; ++i) {
            for (int j = i + 1; j < kConcepts; ++j) {
                auto pc = concept_pair_corr(traces, i, j, means);
                if (pc.degenerate || pc.r == 0.0) continue;
                double inv_cross = 1.0 / std::sqrt(pc.saa * pc.sbb);
                double coef = lambda1 * 2.0 * pc.r / static_cast<double>(kPairs);
                for (std::size_t n = 0; n < traces.size(); ++n) {
                    auto ii = static_cast<std::size_t>(i), jj = static_cast<std::size_t>(j);
                    double a = traces[n].concepts[ii] - means[ii];
                    double b = traces[n].concepts[jj] - means[jj];
                    d_concepts[n][ii] += coef * (b * inv_cross - pc.r * a / pc.saa);
                    d_concepts[n][jj] += coef * (a * inv_cross - pc.r * b / pc.sbb);
                }
            }
        }
    }

    // Encoder backward per window.
    std::vector<double> d_h_eye(hs), d_h_fnirs(hs);
    for (std::size_t n = 0; n < traces.size(); ++n) {
        const auto& tr = traces[n];
        std::array<double, kConcepts> d_logits{};
        for (int i = 0; i < kConcepts; ++i) {
            auto ii = static_cast<std::size_t>(i);
            double c = tr.concepts[ii];
            d_logits[ii] = d_concepts[n][ii] * c * (1.0 - c);
        }

        std::fill(d_h_eye.begin(), d_h_eye.end(), 0.0);
        std::fill(d_h_fnirs.begin(), d_h_fnirs.end(), 0.0);

        // Eye heads (C1, C2).
        for (int head = 0; head < 2; ++head) {
            auto hh = static_cast<std::size_t>(head);
            double dq = d_logits[hh];
            grads.eye.heads[hh].b += dq;
            for (std::size_t i = 0; i < hs; ++i) {
                grads.eye.heads[hh].v[i] += dq * tr.eye.h_drop[i];
                d_h_eye[i] += dq * params.eye.heads[hh].v[i];
            }
        }
        // fNIRS head (C3).
        {
            double dq = d_logits[2];
            grads.fnirs.heads[0].b += dq;
            for (std::size_t i = 0; i < hs; ++i) {
                grads.fnirs.heads[0].v[i] += dq * tr.fnirs.h_drop[i];
                d_h_fnirs[i] += dq * params.fnirs.heads[0].v[i];
            }
        }
        // Multimodal head (C4) over [h_eye ; h_fnirs].
        {
            double dq = d_logits[3];
            grads.multimodal.b += dq;
            for (std::size_t i = 0; i < hs; ++i) {
                grads.multimodal.v[i] += dq * tr.eye.h_drop[i];
                grads.multimodal.v[hs + i] += dq * tr.fnirs.h_drop[i];
                d_h_eye[i] += dq * params.multimodal.v[i];
                d_h_fnirs[i] += dq * params.multimodal.v[hs + i];
            }
        }

        auto encoder_backward = [&](const model::EncoderParams& enc, model::EncoderParams& g,
                                    const model::EncoderTrace& et, std::vector<double>& d_h_drop) {
            auto d = static_cast<std::size_t>(enc.d_in);

            // Dropout (inverted scaling) and GELU.
            std::vector<double> d_ln_out(hs);
            for (std::size_t i = 0; i < hs; ++i) {
                double dh = d_h_drop[i];
                if (!et.drop_mask.empty()) dh *= et.drop_mask[i];
                d_ln_out[i] = dh * model::gelu_grad(et.ln_out[i]);
            }

            // LayerNorm.
            std::vector<double> d_xhat(hs);
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (std::size_t i = 0; i < hs; ++i) {
                g.ln_gain[i] += d_ln_out[i] * et.ln_xhat[i];
                g.ln_bias[i] += d_ln_out[i];
                d_xhat[i] = d_ln_out[i] * enc.ln_gain[i];
                mean_dxhat += d_xhat[i];
                mean_dxhat_xhat += d_xhat[i] * et.ln_xhat[i];
            }
            mean_dxhat /= static_cast<double>(hs);
            mean_dxhat_xhat /= static_cast<double>(hs);

            std::vector<double> d_z(hs);
            for (std::size_t i = 0; i < hs; ++i)
                d_z[i] = (d_xhat[i] - mean_dxhat - et.ln_xhat[i] * mean_dxhat_xhat) *
                         et.ln_inv_std;

            // W_h and the gated input.
            std::vector<double> d_gated(d, 0.0);
            for (std::size_t r = 0; r < hs; ++r) {
                const double* wrow = enc.W_h.data() + r * d;
                double* grow = g.W_h.data() + r * d;
                double dz = d_z[r];
                for (std::size_t c = 0; c < d; ++c) {
                    grow[c] += dz * et.gated[c];
                    d_gated[c] += dz * wrow[c];
                }
            }

            // Attention gate: gated = x .* sigmoid(W_a x).
            std::vector<double> d_a_pre(d);
            for (std::size_t i = 0; i < d; ++i) {
                double da = d_gated[i] * et.x[i];
                d_a_pre[i] = da * et.a[i] * (1.0 - et.a[i]);
            }
            for (std::size_t r = 0; r < d; ++r) {
                double* grow = g.W_a.data() + r * d;
                double dap = d_a_pre[r];
                for (std::size_t c = 0; c < d; ++c) grow[c] += dap * et.x[c];
            }
        };

        encoder_backward(params.eye, grads.eye, tr.eye, d_h_eye);
        encoder_backward(params.fnirs, grads.fnirs, tr.fnirs, d_h_fnirs);
    }

    return grads;
}

double clip_global_norm(ModelParams& grads, double max_norm) {
    double sq = 0.0;
    auto refs = model::param_refs(grads);
    for (const auto& ref : refs)
        for (std::size_t i = 0; i < ref.size; ++i) sq += ref.data[i] * ref.data[i];
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        double scale = max_norm / norm;
        for (const auto& ref : refs)
            for (std::size_t i = 0; i < ref.size; ++i) ref.data[i] *= scale;
    }
    return norm;
}

double cosine_lr(int epoch, int max_epochs, double lr0) {
    double frac = static_cast<double>(epoch) / static_cast<double>(max_epochs);
    return 0.5 * lr0 * (1.0 + std::cos(M_PI * std::min(1.0, frac)));
}

AdamW::AdamW(const ModelParams& params, const TrainConfig& cfg)
    : m_(model::zeros_like(params)), v_(model::zeros_like(params)), cfg_(cfg) {}

void AdamW::step(ModelParams& params, const ModelParams& grads, double lr) {
    ++t_;
    auto p_refs = model::param_refs(params);
    auto g_refs = model::param_refs(const_cast<ModelParams&>(grads));
    auto m_refs = model::param_refs(m_);
    auto v_refs = model::param_refs(v_);
    double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));

    for (std::size_t r = 0; r < p_refs.size(); ++r) {
        double* p = p_refs[r].data;
        const double* g = g_refs[r].data;
        double* m = m_refs[r].data;
        double* v = v_refs[r].data;
        bool decay = p_refs[r].decay;
        for (std::size_t i = 0; i < p_refs[r].size; ++i) {
            m[i] = cfg_.adam_beta1 * m[i] + (1.0 - cfg_.adam_beta1) * g[i];
            v[i] = cfg_.adam_beta2 * v[i] + (1.0 - cfg_.adam_beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            double update = mhat / (std::sqrt(vhat) + cfg_.adam_eps);
            if (decay) update += cfg_.weight_decay * p[i];
            p[i] -= lr * update;
        }
    }
}

Sample to_sample(const features::FeatureWindow& w) {
    Sample s;
    s.x.assign(w.values.begin(), w.values.end());
    s.label = w.label;
    return s;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_val(
    const std::vector<features::FeatureWindow>& windows, double val_fraction,
    std::uint64_t seed) {
    std::map<std::string, std::vector<std::size_t>> by_pid;
    for (std::size_t i = 0; i < windows.size(); ++i)
        by_pid[windows[i].participant_id].push_back(i);

    Rng rng(derive_seed(seed, "val_split"));
    std::vector<std::size_t> train_idx, val_idx;

    if (by_pid.size() >= 4) {
        std::vector<std::string> pids;
        for (const auto& [pid, _] : by_pid) pids.push_back(pid);
        rng.shuffle(pids);
        auto n_val = static_cast<std::size_t>(
            std::max(1.0, std::ceil(val_fraction * static_cast<double>(pids.size()))));
        std::set<std::string> val_pids(pids.begin(), pids.begin() + static_cast<long>(n_val));
        for (std::size_t i = 0; i < windows.size(); ++i) {
            if (val_pids.count(windows[i].participant_id))
                val_idx.push_back(i);
            else
                train_idx.push_back(i);
        }
    } else {
        // Stratified window split per class.
        std::vector<std::size_t> class_idx[2];
        for (std::size_t i = 0; i < windows.size(); ++i)
            class_idx[windows[i].label == 1 ? 1 : 0].push_back(i);
        for (auto& idx : class_idx) {
            rng.shuffle(idx);
            auto n_val = static_cast<std::size_t>(
                std::floor(val_fraction * static_cast<double>(idx.size())));
            n_val = std::max<std::size_t>(idx.empty() ? 0 : 1, n_val);
            for (std::size_t i = 0; i < idx.size(); ++i)
                (i < n_val ? val_idx : train_idx).push_back(idx[i]);
        }
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(val_idx.begin(), val_idx.end());
    }
    return {train_idx, val_idx};
}

TrainResult train_model(const std::vector<Sample>& train_samples,
                        const std::vector<Sample>& val_samples, const TrainConfig& cfg,
                        const ModelSetup& setup) {
    cfg.validate();
    require(!train_samples.empty() && !val_samples.empty(), ErrorCode::SingleClassTraining,
            "training and validation sets must be non-empty");
    {
        bool has0 = false, has1 = false;
        for (const auto& s : train_samples) (s.label == 1 ? has1 : has0) = true;
        require(has0 && has1, ErrorCode::SingleClassTraining,
                "training set holds a single class");
    }

    ModelParams params = model::init_params(setup.dims, setup.family,
                                            derive_seed(cfg.seed, "init"), setup.no_logic);
    params.dropout_rate = setup.dropout_rate;
    AdamW optimizer(params, cfg);

    TrainResult result;
    result.best_params = params;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    int wait = 0;

    std::vector<std::size_t> order(train_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        double lr = cosine_lr(epoch, cfg.max_epochs, cfg.lr);
        Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        Rng dropout_rng(derive_seed(cfg.seed, "dropout", static_cast<std::uint64_t>(epoch)));

        EpochLog log;
        log.epoch = epoch + 1;
        log.lr = lr;
        double epoch_weight = 0.0;

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<model::ForwardTrace> traces;
            std::vector<int> labels;
            traces.reserve(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                const auto& s = train_samples[order[k]];
                traces.push_back(model::forward(params, s.x, true, &dropout_rng));
                labels.push_back(s.label);
            }

            LossBreakdown loss = compute_loss(traces, labels, params, cfg.lambda1, cfg.lambda2);
            ModelParams grads = backward(params, traces, labels, cfg.lambda1, cfg.lambda2);
            if (cfg.freeze_tau) grads.logic.tau_hat.fill(0.0);
            for (double g : grads.logic.tau_hat)
                log.max_abs_tau_grad = std::max(log.max_abs_tau_grad, std::fabs(g));
            clip_global_norm(grads, cfg.grad_clip);
            optimizer.step(params, grads, lr);

            double w = static_cast<double>(stop - start);
            log.train_total += loss.total * w;
            log.train_ce += loss.ce * w;
            log.train_diversity += loss.diversity * w;
            log.train_sparsity += loss.sparsity * w;
            epoch_weight += w;
        }
        log.train_total /= epoch_weight;
        log.train_ce /= epoch_weight;
        log.train_diversity /= epoch_weight;
        log.train_sparsity /= epoch_weight;

        // Validation in eval mode.
        {
            std::vector<model::ForwardTrace> traces;
            std::vector<int> labels;
            traces.reserve(val_samples.size());
            int correct = 0;
            for (const auto& s : val_samples) {
                traces.push_back(model::forward(params, s.x, false, nullptr));
                labels.push_back(s.label);
                if (static_cast<int>(model::classify(traces.back().yhat)) == s.label) ++correct;
            }
            LossBreakdown vloss = compute_loss(traces, labels, params, cfg.lambda1, cfg.lambda2);
            log.val_loss = vloss.total;
            log.val_acc = static_cast<double>(correct) / static_cast<double>(val_samples.size());
        }

        result.max_abs_tau_grad = std::max(result.max_abs_tau_grad, log.max_abs_tau_grad);
        result.log.push_back(log);

        if (log.val_loss < result.best_val_loss) {
            result.best_val_loss = log.val_loss;
            result.best_params = params;
            result.best_epoch = log.epoch;
            wait = 0;
        } else {
            ++wait;
            if (wait >= cfg.patience) break;
        }
    }
    return result;
}

void write_train_log_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    out << "epoch,lr,train_total,train_ce,train_diversity,train_sparsity,val_loss,val_acc,"
           "max_abs_tau_grad\n";
    for (const auto& e : log) {
        out << e.epoch << ',' << format_double(e.lr) << ',' << format_double(e.train_total) << ','
            << format_double(e.train_ce) << ',' << format_double(e.train_diversity) << ','
            << format_double(e.train_sparsity) << ',' << format_double(e.val_loss) << ','
            << format_double(e.val_acc) << ',' << format_double(e.max_abs_tau_grad) << '\n';
    }
}

}  // namespace fatigue::train
