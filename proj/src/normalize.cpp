#include "fatigue/normalize.hpp"

#include <cmath>
#include <set>

#include "fatigue/common.hpp"

namespace fatigue::normalize {

bool StatsProvenance::used_fatigued_window_of(const std::string& participant_id) const {
    for (const auto& [pid, idx, label] : sources) {
        (void)idx;
        if (pid == participant_id && label == 1) return true;
    }
    return false;
}

bool StatsProvenance::used_any_window_of(const std::string& participant_id) const {
    for (const auto& [pid, idx, label] : sources) {
        (void)idx;
        (void)label;
        if (pid == participant_id) return true;
    }
    return false;
}

namespace {

template <typename Stats>
void accumulate(Stats& stats, const std::vector<const features::FeatureWindow*>& windows) {
    const auto n = static_cast<double>(windows.size());
    for (const auto* w : windows) {
        for (int i = 0; i < features::kFeatureDim; ++i)
            stats.mu[static_cast<std::size_t>(i)] += w->values[static_cast<std::size_t>(i)];
    }
    for (double& m : stats.mu) m /= n;
    for (const auto* w : windows) {
        for (int i = 0; i < features::kFeatureDim; ++i) {
            auto idx = static_cast<std::size_t>(i);
            double d = w->values[idx] - stats.mu[idx];
            stats.sigma[idx] += d * d;
        }
    }
    for (double& s : stats.sigma) s = std::sqrt(s / n);
    for (const auto* w : windows)
        stats.provenance.sources.emplace_back(w->participant_id, w->window_index, w->label);
}

features::FeatureWindow apply_impl(const std::array<double, features::kFeatureDim>& mu,
                                   const std::array<double, features::kFeatureDim>& sigma,
                                   double epsilon, const features::FeatureWindow& w) {
    features::FeatureWindow out = w;
    for (int i = 0; i < features::kFeatureDim; ++i) {
        auto idx = static_cast<std::size_t>(i);
        out.values[idx] = (w.values[idx] - mu[idx]) / (sigma[idx] + epsilon);
    }
    return out;
}

}  // namespace

BaselineStats fit_participant_baseline(const std::vector<features::FeatureWindow>& windows,
                                       double epsilon) {
    std::vector<const features::FeatureWindow*> alert;
    std::string pid;
    for (const auto& w : windows) {
        if (pid.empty()) pid = w.participant_id;
        require(w.participant_id == pid, ErrorCode::DimensionMismatch,
                "fit_participant_baseline got windows from several participants");
        if (w.label == 0) alert.push_back(&w);
    }
    require(alert.size() >= 2, ErrorCode::InsufficientAlertSamples,
            pid + ": needs >= 2 alert windows, has " + std::to_string(alert.size()));

    BaselineStats stats;
    stats.participant_id = pid;
    stats.epsilon = epsilon;
    stats.n_alert = static_cast<int>(alert.size());
    accumulate(stats, alert);
    return stats;
}

CohortStats fit_cohort_stats(const std::vector<features::FeatureWindow>& windows, double epsilon) {
    require(windows.size() >= 2, ErrorCode::InsufficientAlertSamples,
            "cohort stats need >= 2 windows");
    std::vector<const features::FeatureWindow*> all;
    all.reserve(windows.size());
    for (const auto& w : windows) all.push_back(&w);
    CohortStats stats;
    stats.epsilon = epsilon;
    stats.n = static_cast<int>(windows.size());
    accumulate(stats, all);
    return stats;
}

features::FeatureWindow apply(const BaselineStats& stats, const features::FeatureWindow& w) {
    return apply_impl(stats.mu, stats.sigma, stats.epsilon, w);
}

features::FeatureWindow apply(const CohortStats& stats, const features::FeatureWindow& w) {
    return apply_impl(stats.mu, stats.sigma, stats.epsilon, w);
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Global: return "global";
        case Strategy::ParticipantAware: return "participant";
        case Strategy::NoCalibration: return "none";
    }
    return "participant";
}

Strategy strategy_from_name(const std::string& s) {
    if (s == "global") return Strategy::Global;
    if (s == "participant") return Strategy::ParticipantAware;
    if (s == "none" || s == "no-calibration") return Strategy::NoCalibration;
    raise(ErrorCode::ConfigError, "unknown normalization strategy '" + s + "'");
}

features::FeatureWindow Normalizer::operator()(const features::FeatureWindow& w) const {
    auto it = baselines.find(w.participant_id);
    if (it != baselines.end()) return apply(it->second, w);
    require(has_cohort, ErrorCode::MissingCalibrationData,
            "no statistics available for participant " + w.participant_id);
    return apply(cohort, w);
}

std::vector<const StatsProvenance*> Normalizer::provenances() const {
    std::vector<const StatsProvenance*> out;
    for (const auto& [pid, stats] : baselines) {
        (void)pid;
        out.push_back(&stats.provenance);
    }
    if (has_cohort) out.push_back(&cohort.provenance);
    return out;
}

nlohmann::json Normalizer::to_json() const {
    nlohmann::json j;
    j["strategy"] = strategy_name(strategy);
    j["baselines"] = nlohmann::json::array();
    for (const auto& [pid, stats] : baselines) {
        nlohmann::json b;
        b["participant_id"] = pid;
        b["n_alert"] = stats.n_alert;
        b["epsilon"] = stats.epsilon;
        b["mu"] = stats.mu;
        b["sigma"] = stats.sigma;
        j["baselines"].push_back(std::move(b));
    }
    if (has_cohort) {
        j["cohort"] = {{"n", cohort.n}, {"epsilon", cohort.epsilon}, {"mu", cohort.mu},
                       {"sigma", cohort.sigma}};
    }
    return j;
}

Normalizer make_strategy(Strategy kind, const std::vector<features::FeatureWindow>& train_windows,
                         const std::vector<features::FeatureWindow>& test_subject_alert_windows,
                         double epsilon, bool no_calibration_train_pooled) {
    require(!train_windows.empty(), ErrorCode::MissingCalibrationData, "no training windows");

    Normalizer norm;
    norm.strategy = kind;

    std::map<std::string, std::vector<features::FeatureWindow>> by_pid;
    for (const auto& w : train_windows) by_pid[w.participant_id].push_back(w);

    switch (kind) {
        case Strategy::Global:
            norm.cohort = fit_cohort_stats(train_windows, epsilon);
            norm.has_cohort = true;
            break;

        case Strategy::ParticipantAware: {
            for (const auto& [pid, ws] : by_pid)
                norm.baselines[pid] = fit_participant_baseline(ws, epsilon);
            require(!test_subject_alert_windows.empty(), ErrorCode::MissingCalibrationData,
                    "participant-aware strategy needs the held-out subject's alert windows");
            for (const auto& w : test_subject_alert_windows)
                require(w.label == 0, ErrorCode::MissingCalibrationData,
                        "calibration windows must be alert-labelled");
            auto test_stats = fit_participant_baseline(test_subject_alert_windows, epsilon);
            norm.baselines[test_stats.participant_id] = std::move(test_stats);
            break;
        }

        case Strategy::NoCalibration:
            if (!no_calibration_train_pooled) {
                for (const auto& [pid, ws] : by_pid)
                    norm.baselines[pid] = fit_participant_baseline(ws, epsilon);
            }
            norm.cohort = fit_cohort_stats(train_windows, epsilon);
            norm.has_cohort = true;
            break;
    }
    return norm;
}

}  // namespace fatigue::normalize
