#include "fatigue/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace fatigue::model {

using nlohmann::json;

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / M_SQRT2)); }

double gelu_grad(double x) {
    double cdf = 0.5 * (1.0 + std::erf(x / M_SQRT2));
    double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return cdf + x * pdf;
}

namespace {

void init_uniform(std::vector<double>& w, std::size_t n, int fan_in, Rng& rng) {
    w.resize(n);
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w) v = rng.uniform(-bound, bound);
}

EncoderParams init_encoder(int d_in, int hidden, int n_heads, Rng& rng) {
    EncoderParams enc;
    enc.d_in = d_in;
    enc.hidden = hidden;
    init_uniform(enc.W_a, static_cast<std::size_t>(d_in) * static_cast<std::size_t>(d_in), d_in, rng);
    init_uniform(enc.W_h, static_cast<std::size_t>(hidden) * static_cast<std::size_t>(d_in), d_in, rng);
    enc.ln_gain.assign(static_cast<std::size_t>(hidden), 1.0);
    enc.ln_bias.assign(static_cast<std::size_t>(hidden), 0.0);
    enc.heads.resize(static_cast<std::size_t>(n_heads));
    for (auto& head : enc.heads) {
        init_uniform(head.v, static_cast<std::size_t>(hidden), hidden, rng);
        head.b = 0.0;
    }
    return enc;
}

void matvec(const std::vector<double>& w, const std::vector<double>& x, std::vector<double>& out,
            int rows, int cols) {
    out.assign(static_cast<std::size_t>(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
        const double* row = w.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
        double s = 0.0;
        for (int c = 0; c < cols; ++c) s += row[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = s;
    }
}

EncoderTrace encode(const EncoderParams& enc, const double* x_begin, bool training, Rng* rng,
                    double dropout_rate) {
    EncoderTrace tr;
    auto d = static_cast<std::size_t>(enc.d_in);
    auto h = static_cast<std::size_t>(enc.hidden);
    tr.x.assign(x_begin, x_begin + d);

    matvec(enc.W_a, tr.x, tr.a_pre, enc.d_in, enc.d_in);
    tr.a.resize(d);
    tr.gated.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        tr.a[i] = sigmoid(tr.a_pre[i]);
        tr.gated[i] = tr.x[i] * tr.a[i];
    }

    matvec(enc.W_h, tr.gated, tr.z, enc.hidden, enc.d_in);

    double m = 0.0;
    for (double v : tr.z) m += v;
    m /= static_cast<double>(h);
    double var = 0.0;
    for (double v : tr.z) var += (v - m) * (v - m);
    var /= static_cast<double>(h);
    tr.ln_mean = m;
    tr.ln_inv_std = 1.0 / std::sqrt(var + kLayerNormEps);

    tr.ln_xhat.resize(h);
    tr.ln_out.resize(h);
    tr.h.resize(h);
    for (std::size_t i = 0; i < h; ++i) {
        tr.ln_xhat[i] = (tr.z[i] - m) * tr.ln_inv_std;
        tr.ln_out[i] = enc.ln_gain[i] * tr.ln_xhat[i] + enc.ln_bias[i];
        tr.h[i] = gelu(tr.ln_out[i]);
    }

    if (training) {
        require(rng != nullptr, ErrorCode::MissingTrace, "training forward requires an RNG");
        tr.drop_mask.resize(h);
        tr.h_drop.resize(h);
        double keep = 1.0 - dropout_rate;
        for (std::size_t i = 0; i < h; ++i) {
            tr.drop_mask[i] = rng->uniform() < dropout_rate ? 0.0 : 1.0 / keep;
            tr.h_drop[i] = tr.h[i] * tr.drop_mask[i];
        }
    } else {
        tr.h_drop = tr.h;
    }
    return tr;
}

double head_logit(const EncoderParams::Head& head, const std::vector<double>& h) {
    double s = head.b;
    for (std::size_t i = 0; i < h.size(); ++i) s += head.v[i] * h[i];
    return s;
}

}  // namespace

std::vector<ParamRef> param_refs(ModelParams& p) {
    std::vector<ParamRef> refs;
    auto add = [&refs](const std::string& name, std::vector<double>& v, bool decay) {
        refs.push_back({name, v.data(), v.size(), decay});
    };
    auto add_scalar = [&refs](const std::string& name, double& v, bool decay) {
        refs.push_back({name, &v, 1, decay});
    };
    auto add_array = [&refs](const std::string& name, double* v, std::size_t n, bool decay) {
        refs.push_back({name, v, n, decay});
    };

    auto add_encoder = [&](const std::string& prefix, EncoderParams& enc) {
        add(prefix + ".W_a", enc.W_a, true);
        add(prefix + ".W_h", enc.W_h, true);
        add(prefix + ".ln_gain", enc.ln_gain, true);
        add(prefix + ".ln_bias", enc.ln_bias, false);
        for (std::size_t i = 0; i < enc.heads.size(); ++i) {
            add(prefix + ".head" + std::to_string(i) + ".v", enc.heads[i].v, true);
            add_scalar(prefix + ".head" + std::to_string(i) + ".b", enc.heads[i].b, false);
        }
    };

    add_encoder("eye", p.eye);
    add_encoder("fnirs", p.fnirs);
    add("multimodal.v", p.multimodal.v, true);
    add_scalar("multimodal.b", p.multimodal.b, false);

    add_array("logic.tau_hat", p.logic.tau_hat.data(), kConcepts, false);
    add_array("logic.w_alpha", p.logic.w_alpha.data(), kConcepts, false);
    add_array("logic.beta", p.logic.beta.data(), kRules, false);
    add_array("logic.agg_w", p.logic.agg_w.data(), kRules, true);
    add_scalar("logic.agg_b", p.logic.agg_b, false);

    if (p.no_logic) {
        add_array("linear_head.u", p.linear_head.u.data(), kConcepts, true);
        add_scalar("linear_head.c", p.linear_head.c, false);
    }
    return refs;
}

std::size_t param_count(const ModelParams& params) {
    std::size_t n = 0;
    for (const auto& ref : param_refs(const_cast<ModelParams&>(params))) n += ref.size;
    return n;
}

ModelParams zeros_like(const ModelParams& params) {
    ModelParams z = params;
    for (auto& ref : param_refs(z)) std::fill(ref.data, ref.data + ref.size, 0.0);
    z.logic.temperature = params.logic.temperature;
    return z;
}

ModelParams init_params(const ModelDims& dims, fuzzy::OperatorFamily family, std::uint64_t seed,
                        bool no_logic) {
    Rng rng(derive_seed(seed, "model_init"));
    ModelParams p;
    p.dims = dims;
    p.family = family;
    p.no_logic = no_logic;
    p.eye = init_encoder(dims.d_eye, dims.hidden, 2, rng);
    p.fnirs = init_encoder(dims.d_fnirs, dims.hidden, 1, rng);
    init_uniform(p.multimodal.v, static_cast<std::size_t>(2 * dims.hidden), 2 * dims.hidden, rng);
    p.multimodal.b = 0.0;
    // tau_hat = 0 so tau starts at 0.5; alpha uniform; rule and aggregation
    // weights start at 1.
    p.logic = LogicParams{};
    if (no_logic) {
        double bound = 1.0 / std::sqrt(static_cast<double>(kConcepts));
        for (auto& u : p.linear_head.u) u = rng.uniform(-bound, bound);
        p.linear_head.c = 0.0;
    }
    return p;
}

std::array<double, kConcepts> soft_threshold(const std::array<double, kConcepts>& concepts,
                                             const std::array<double, kConcepts>& tau_hat,
                                             double temperature) {
    std::array<double, kConcepts> out{};
    for (int i = 0; i < kConcepts; ++i) {
        auto idx = static_cast<std::size_t>(i);
        double tau = sigmoid(tau_hat[idx]);
        out[idx] = sigmoid((concepts[idx] - tau) * temperature);
    }
    return out;
}

std::array<double, kConcepts> softmax4(const std::array<double, kConcepts>& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::array<double, kConcepts> out{};
    double sum = 0.0;
    for (int i = 0; i < kConcepts; ++i) {
        auto idx = static_cast<std::size_t>(i);
        out[idx] = std::exp(logits[idx] - mx);
        sum += out[idx];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::array<double, kRules> fire_rules(const std::array<double, kConcepts>& soft,
                                      const LogicParams& logic, fuzzy::OperatorFamily family) {
    std::array<double, kRules> f{};
    f[0] = logic.beta[0] * soft[0];
    f[1] = logic.beta[1] * fuzzy::t_conorm(soft[1], soft[2], family);
    auto alpha = softmax4(logic.w_alpha);
    double weighted = 0.0;
    for (int i = 0; i < kConcepts; ++i)
        weighted += alpha[static_cast<std::size_t>(i)] * soft[static_cast<std::size_t>(i)];
    f[2] = logic.beta[2] * weighted;
    return f;
}

double aggregate(const std::array<double, kRules>& firings, const LogicParams& logic) {
    double s = logic.agg_b;
    for (int j = 0; j < kRules; ++j)
        s += logic.agg_w[static_cast<std::size_t>(j)] * firings[static_cast<std::size_t>(j)];
    return sigmoid(s);
}

ForwardTrace forward(const ModelParams& params, const std::vector<double>& x, bool training,
                     Rng* rng, const std::array<bool, kConcepts>& knockout) {
    require(static_cast<int>(x.size()) == params.dims.d_total(), ErrorCode::DimensionMismatch,
            "forward input has dimension " + std::to_string(x.size()) + ", model expects " +
                std::to_string(params.dims.d_total()));

    ForwardTrace tr;
    tr.eye = encode(params.eye, x.data(), training, rng, params.dropout_rate);
    tr.fnirs = encode(params.fnirs, x.data() + params.dims.d_eye, training, rng,
                      params.dropout_rate);

    tr.concept_logits[0] = head_logit(params.eye.heads[0], tr.eye.h_drop);
    tr.concept_logits[1] = head_logit(params.eye.heads[1], tr.eye.h_drop);
    tr.concept_logits[2] = head_logit(params.fnirs.heads[0], tr.fnirs.h_drop);
    {
        double s = params.multimodal.b;
        auto h = static_cast<std::size_t>(params.dims.hidden);
        for (std::size_t i = 0; i < h; ++i) s += params.multimodal.v[i] * tr.eye.h_drop[i];
        for (std::size_t i = 0; i < h; ++i) s += params.multimodal.v[h + i] * tr.fnirs.h_drop[i];
        tr.concept_logits[3] = s;
    }

    for (int i = 0; i < kConcepts; ++i) {
        auto idx = static_cast<std::size_t>(i);
        tr.concepts[idx] = knockout[idx] ? 0.0 : sigmoid(tr.concept_logits[idx]);
    }

    for (int i = 0; i < kConcepts; ++i) {
        auto idx = static_cast<std::size_t>(i);
        tr.thresholds[idx] = sigmoid(params.logic.tau_hat[idx]);
    }
    tr.soft = soft_threshold(tr.concepts, params.logic.tau_hat, params.logic.temperature);
    tr.alpha = softmax4(params.logic.w_alpha);

    if (params.no_logic) {
        double s = params.linear_head.c;
        for (int i = 0; i < kConcepts; ++i)
            s += params.linear_head.u[static_cast<std::size_t>(i)] *
                 tr.concepts[static_cast<std::size_t>(i)];
        tr.logit = s;
        tr.yhat = sigmoid(s);
    } else {
        tr.conorm23 = fuzzy::t_conorm(tr.soft[1], tr.soft[2], params.family);
        tr.firings = fire_rules(tr.soft, params.logic, params.family);
        double s = params.logic.agg_b;
        for (int j = 0; j < kRules; ++j)
            s += params.logic.agg_w[static_cast<std::size_t>(j)] *
                 tr.firings[static_cast<std::size_t>(j)];
        tr.logit = s;
        tr.yhat = sigmoid(s);
    }

    require(std::isfinite(tr.yhat), ErrorCode::NonFiniteActivation,
            "non-finite prediction for participant window");
    return tr;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
    json j;
    j["format"] = "fatigue-checkpoint";
    j["version"] = 1;
    j["dims"] = {{"d_eye", params.dims.d_eye},
                 {"d_fnirs", params.dims.d_fnirs},
                 {"hidden", params.dims.hidden}};
    j["operator_family"] = fuzzy::family_name(params.family);
    j["no_logic"] = params.no_logic;
    j["dropout_rate"] = params.dropout_rate;
    j["temperature"] = params.logic.temperature;

    json tensors = json::object();
    auto& mutable_params = const_cast<ModelParams&>(params);
    for (const auto& ref : param_refs(mutable_params)) {
        tensors[ref.name] = {{"shape", {ref.size}},
                             {"data", std::vector<double>(ref.data, ref.data + ref.size)}};
    }
    j["params"] = std::move(tensors);

    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoError, "cannot write checkpoint " + path.string());
    out << j.dump() << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open checkpoint " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(ErrorCode::IoError, path.string() + ": " + e.what());
    }
    require(j.value("format", "") == "fatigue-checkpoint", ErrorCode::ConfigError,
            "not a checkpoint file: " + path.string());
    require(j.value("version", 0) == 1, ErrorCode::ConfigError, "unsupported checkpoint version");

    ModelDims dims;
    dims.d_eye = j.at("dims").at("d_eye").get<int>();
    dims.d_fnirs = j.at("dims").at("d_fnirs").get<int>();
    dims.hidden = j.at("dims").at("hidden").get<int>();

    ModelParams p = init_params(dims, fuzzy::family_from_name(j.at("operator_family")), 0,
                                j.value("no_logic", false));
    p.dropout_rate = j.value("dropout_rate", kDefaultDropout);
    p.logic.temperature = j.value("temperature", kDefaultTemperature);

    const auto& tensors = j.at("params");
    for (auto& ref : param_refs(p)) {
        require(tensors.contains(ref.name), ErrorCode::ConfigError,
                "checkpoint missing tensor " + ref.name);
        auto data = tensors.at(ref.name).at("data").get<std::vector<double>>();
        require(data.size() == ref.size, ErrorCode::DimensionMismatch,
                "checkpoint tensor " + ref.name + " has wrong size");
        std::copy(data.begin(), data.end(), ref.data);
    }
    return p;
}

}  // namespace fatigue::model
