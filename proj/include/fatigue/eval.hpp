#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fatigue/features.hpp"
#include "fatigue/model.hpp"
#include "fatigue/normalize.hpp"
#include "fatigue/stats.hpp"
#include "fatigue/train.hpp"

namespace fatigue::eval {

// Per-window evaluation record kept for fidelity audits and the audit export.
struct TraceRecord {
    std::string participant_id;
    std::uint64_t seed = 0;
    int window_index = 0;
    int label = 0;
    double yhat = 0.5;
    std::array<double, model::kConcepts> concepts{};
    std::array<double, model::kConcepts> soft{};
    std::array<double, model::kRules> firings{};
};

struct FidelityResult {
    double concept_phi = 0.0;                             // mean |r_pb(C_i, y)|
    std::array<double, model::kConcepts> concept_rpb{};
    double rule_phi = 0.0;                                // same over rule firings
    std::array<double, model::kRules> rule_rpb{};
};

// Point-biserial concept/rule fidelity for one subject's traces. A constant
// activation contributes r_pb = 0. Throws SingleClassSubject.
FidelityResult concept_fidelity(const std::vector<TraceRecord>& traces);

// d_j = mean f_j on fatigued windows - mean f_j on alert windows.
std::array<double, model::kRules> rule_discrimination(const std::vector<TraceRecord>& traces);

struct LosoConfig {
    normalize::Strategy strategy = normalize::Strategy::ParticipantAware;
    fuzzy::OperatorFamily family = fuzzy::OperatorFamily::Product;
    bool no_logic = false;
    bool freeze_tau = false;
    std::array<bool, model::kConcepts> knockout{};  // inference-time concept zeroing
    train::TrainConfig train;
    double epsilon = normalize::kDefaultEpsilon;
    bool no_calibration_train_pooled = false;
    // The held-out subject's alert (calibration) windows are part of the
    // evaluation set; this flag exists for sensitivity analysis only.
    bool include_calibration_in_accuracy = true;
    int jobs = 1;
    model::ModelDims dims;
    double dropout_rate = model::kDefaultDropout;
    bool keep_params = true;  // retain per-seed best params (knockout re-eval)
};

struct FoldReport {
    std::string held_out_subject;
    std::vector<std::uint64_t> seeds;
    std::vector<double> per_seed_accuracy;
    double accuracy = 0.0;  // seed-averaged
    std::vector<TraceRecord> traces;
    double concept_fidelity = 0.0;  // seed-averaged
    double rule_fidelity = 0.0;
    std::array<double, model::kConcepts> concept_rpb{};
    std::array<double, model::kRules> discrimination{};
    double max_abs_tau_grad = 0.0;
    std::vector<model::ModelParams> per_seed_params;  // empty unless keep_params
    std::vector<std::vector<train::EpochLog>> per_seed_logs;
};

struct LosoSummary {
    std::vector<FoldReport> folds;
    double accuracy_mean = 0.0;
    double accuracy_sd = 0.0;  // across folds, seed-averaged first
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::array<double, model::kRules> rule_cohens_d{};
    stats::Correlation fidelity_accuracy;  // defined when >= 3 folds
};

// Leave-one-subject-out evaluation: per fold, fit the normalization strategy
// on the permitted statistics sources, train once per seed, evaluate every
// held-out window (calibration windows included), then seed-average per fold
// before aggregating across folds. Throws with the fold id on failure.
LosoSummary run_loso(const std::vector<features::FeatureWindow>& windows, const LosoConfig& config,
                     const std::vector<std::uint64_t>& seeds);

// Pearson correlation between per-subject concept fidelity and accuracy.
// Throws TooFewSubjects below 3 folds.
stats::Correlation fidelity_accuracy_correlation(const LosoSummary& summary);

// Wilcoxon signed-rank over paired per-fold accuracies.
stats::WilcoxonResult paired_comparison(const std::vector<double>& acc_a,
                                        const std::vector<double>& acc_b);

// Throws std::logic_error if any normalization statistic saw a fatigued
// window of the held-out subject, or a non-calibration strategy saw the
// held-out subject at all.
void assert_no_leakage(const normalize::Normalizer& norm, const std::string& test_subject);

struct AblationRow {
    std::string label;
    double accuracy_mean = 0.0;
    double accuracy_sd = 0.0;
    double delta_pp = 0.0;  // percentage points vs base
    bool is_base = false;
    double wilcoxon_w = std::numeric_limits<double>::quiet_NaN();
    double wilcoxon_p = std::numeric_limits<double>::quiet_NaN();
};

struct AblationTable {
    std::string suite;  // normalization | concepts | operators | thresholds
    std::vector<AblationRow> rows;
};

struct AblationReport {
    LosoSummary base;
    std::vector<AblationTable> tables;
    double frozen_tau_max_grad = 0.0;  // max |applied tau grad| in the frozen run
};

enum class AblationSuite { Normalization, Concepts, Operators, Thresholds };

// Runs the four suites (or a subset): normalization strategies, per-concept
// inference knockouts (reusing the base run's trained parameters),
// operator families, and learned-vs-frozen thresholds. `operator_filter`
// restricts which families suite (iii) evaluates.
AblationReport run_ablations(
    const std::vector<features::FeatureWindow>& windows, const LosoConfig& base_config,
    const std::vector<std::uint64_t>& seeds,
    const std::vector<AblationSuite>& suites = {AblationSuite::Normalization,
                                                AblationSuite::Concepts, AblationSuite::Operators,
                                                AblationSuite::Thresholds},
    const std::vector<fuzzy::OperatorFamily>& operator_filter = {
        fuzzy::OperatorFamily::Product, fuzzy::OperatorFamily::Lukasiewicz,
        fuzzy::OperatorFamily::Goedel});

}  // namespace fatigue::eval
