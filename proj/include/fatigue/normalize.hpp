#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "fatigue/features.hpp"

namespace fatigue::normalize {

inline constexpr double kDefaultEpsilon = 1e-6;

// Records which windows fed a statistic so leakage checks can audit it.
struct StatsProvenance {
    // (participant_id, window_index, label) triples.
    std::vector<std::tuple<std::string, int, int>> sources;

    bool used_fatigued_window_of(const std::string& participant_id) const;
    bool used_any_window_of(const std::string& participant_id) const;
};

struct BaselineStats {
    std::string participant_id;
    std::array<double, features::kFeatureDim> mu{};
    std::array<double, features::kFeatureDim> sigma{};  // population convention
    int n_alert = 0;
    double epsilon = kDefaultEpsilon;
    StatsProvenance provenance;
};

struct CohortStats {
    std::array<double, features::kFeatureDim> mu{};
    std::array<double, features::kFeatureDim> sigma{};
    int n = 0;
    double epsilon = kDefaultEpsilon;
    StatsProvenance provenance;
};

// Per-participant baseline from the alert windows only; fatigued windows
// never touch the statistics. Throws InsufficientAlertSamples (< 2 alert
// windows).
BaselineStats fit_participant_baseline(const std::vector<features::FeatureWindow>& windows,
                                       double epsilon = kDefaultEpsilon);

// Pooled statistics over all supplied windows (training cohort).
CohortStats fit_cohort_stats(const std::vector<features::FeatureWindow>& windows,
                             double epsilon = kDefaultEpsilon);

features::FeatureWindow apply(const BaselineStats& stats, const features::FeatureWindow& w);
features::FeatureWindow apply(const CohortStats& stats, const features::FeatureWindow& w);

enum class Strategy { Global, ParticipantAware, NoCalibration };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& s);

// Resolved per-window normalizer for one LOSO fold.
//   Global:           one training CohortStats for everyone.
//   ParticipantAware: per-participant baselines; the held-out subject's
//                     baseline is fit on its alert windows only.
//   NoCalibration:    training subjects get baselines, the held-out subject
//                     gets the training CohortStats (or, with
//                     train_pooled = true, everyone gets the CohortStats).
class Normalizer {
public:
    features::FeatureWindow operator()(const features::FeatureWindow& w) const;

    // Every provenance record backing this normalizer, for leakage audits.
    std::vector<const StatsProvenance*> provenances() const;

    nlohmann::json to_json() const;

    Strategy strategy = Strategy::ParticipantAware;
    std::map<std::string, BaselineStats> baselines;  // keyed by participant
    CohortStats cohort;
    bool has_cohort = false;
};

Normalizer make_strategy(Strategy kind, const std::vector<features::FeatureWindow>& train_windows,
                         const std::vector<features::FeatureWindow>& test_subject_alert_windows,
                         double epsilon = kDefaultEpsilon, bool no_calibration_train_pooled = false);

}  // namespace fatigue::normalize
