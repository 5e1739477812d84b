#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fatigue/dataio.hpp"
#include "fatigue/eval.hpp"

namespace fatigue::experiment {

// Everything a loso/ablate run needs; serializes to JSON so runs are
// reproducible from the emitted effective_config.json.
struct ExperimentConfig {
    // Data source: exactly one of data_dir / features_csv / synthetic.
    std::string data_dir;
    std::string features_csv;
    bool use_synthetic = false;
    dataio::SyntheticCohortSpec synthetic;

    std::string strategy = "participant";  // global | participant | none
    std::string family = "product";        // product | lukasiewicz | goedel
    bool no_logic = false;
    bool freeze_tau = false;
    int knockout_concept = 0;  // 0 = none, 1..4 = zero that concept at inference
    std::vector<std::uint64_t> seeds{42, 123, 456};
    train::TrainConfig train;
    double epsilon = normalize::kDefaultEpsilon;
    bool no_calibration_train_pooled = false;
    bool include_calibration_in_accuracy = true;
    bool save_checkpoints = false;
    bool emit_train_logs = true;
    int jobs = 1;
    std::string out_dir;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);

    eval::LosoConfig loso_config() const;
    void validate() const;
};

// Resolves the configured data source into feature windows.
std::vector<features::FeatureWindow> load_windows(const ExperimentConfig& config);

// Full loso run: writes effective_config.json, summary.json, folds.csv,
// traces.csv, per-fold training logs and (optionally) checkpoints into
// config.out_dir. All payload files are byte-deterministic; the only
// timestamp lives in meta.json.
eval::LosoSummary run_loso_experiment(const ExperimentConfig& config);

// Ablation suites; writes one ablation_<suite>.csv per suite plus the base
// summary files.
eval::AblationReport run_ablate_experiment(
    const ExperimentConfig& config, const std::vector<eval::AblationSuite>& suites,
    const std::vector<fuzzy::OperatorFamily>& operator_filter = {
        fuzzy::OperatorFamily::Product, fuzzy::OperatorFamily::Lukasiewicz,
        fuzzy::OperatorFamily::Goedel});

// Extracts one subject's rows from a completed run's traces.csv, ordered by
// (window_index, seed), copying the stored values verbatim. Returns the
// output path. Throws UnknownSubject.
std::filesystem::path write_audit_csv(const std::filesystem::path& run_dir,
                                      const std::string& subject_id);

void write_summary_json(const eval::LosoSummary& summary, const ExperimentConfig& config,
                        const std::filesystem::path& path);
void write_folds_csv(const eval::LosoSummary& summary, const std::filesystem::path& path);
void write_traces_csv(const eval::LosoSummary& summary, const std::filesystem::path& path);

}  // namespace fatigue::experiment
