#include "fatigue/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

namespace fatigue::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

json ExperimentConfig::to_json() const {
    json j;
    j["data_dir"] = data_dir;
    j["features_csv"] = features_csv;
    j["use_synthetic"] = use_synthetic;
    j["synthetic"] = {{"n_subjects", synthetic.n_subjects},
                      {"windows_per_phase", synthetic.windows_per_phase},
                      {"concept_effect_sizes", synthetic.concept_effect_sizes},
                      {"subject_noise_sd", synthetic.subject_noise_sd},
                      {"noise_grade", synthetic.noise_grade},
                      {"polarity_flips", synthetic.polarity_flips},
                      {"seed", synthetic.seed}};
    j["strategy"] = strategy;
    j["family"] = family;
    j["no_logic"] = no_logic;
    j["freeze_tau"] = freeze_tau;
    j["knockout_concept"] = knockout_concept;
    j["seeds"] = seeds;
    j["train"] = {{"lr", train.lr},
                  {"weight_decay", train.weight_decay},
                  {"batch_size", train.batch_size},
                  {"max_epochs", train.max_epochs},
                  {"patience", train.patience},
                  {"grad_clip", train.grad_clip},
                  {"lambda1", train.lambda1},
                  {"lambda2", train.lambda2},
                  {"val_fraction", train.val_fraction}};
    j["epsilon"] = epsilon;
    j["no_calibration_train_pooled"] = no_calibration_train_pooled;
    j["include_calibration_in_accuracy"] = include_calibration_in_accuracy;
    j["save_checkpoints"] = save_checkpoints;
    j["emit_train_logs"] = emit_train_logs;
    j["jobs"] = jobs;
    j["out_dir"] = out_dir;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    c.data_dir = j.value("data_dir", c.data_dir);
    c.features_csv = j.value("features_csv", c.features_csv);
    c.use_synthetic = j.value("use_synthetic", c.use_synthetic);
    if (j.contains("synthetic")) {
        const auto& s = j.at("synthetic");
        c.synthetic.n_subjects = s.value("n_subjects", c.synthetic.n_subjects);
        c.synthetic.windows_per_phase =
            s.value("windows_per_phase", c.synthetic.windows_per_phase);
        if (s.contains("concept_effect_sizes"))
            c.synthetic.concept_effect_sizes =
                s.at("concept_effect_sizes").get<std::array<double, 4>>();
        c.synthetic.subject_noise_sd = s.value("subject_noise_sd", c.synthetic.subject_noise_sd);
        c.synthetic.noise_grade = s.value("noise_grade", c.synthetic.noise_grade);
        c.synthetic.polarity_flips = s.value("polarity_flips", c.synthetic.polarity_flips);
        c.synthetic.seed = s.value("seed", c.synthetic.seed);
    }
    c.strategy = j.value("strategy", c.strategy);
    c.family = j.value("family", c.family);
    c.no_logic = j.value("no_logic", c.no_logic);
    c.freeze_tau = j.value("freeze_tau", c.freeze_tau);
    c.knockout_concept = j.value("knockout_concept", c.knockout_concept);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("train")) {
        const auto& t = j.at("train");
        c.train.lr = t.value("lr", c.train.lr);
        c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
        c.train.patience = t.value("patience", c.train.patience);
        c.train.grad_clip = t.value("grad_clip", c.train.grad_clip);
        c.train.lambda1 = t.value("lambda1", c.train.lambda1);
        c.train.lambda2 = t.value("lambda2", c.train.lambda2);
        c.train.val_fraction = t.value("val_fraction", c.train.val_fraction);
    }
    c.epsilon = j.value("epsilon", c.epsilon);
    c.no_calibration_train_pooled =
        j.value("no_calibration_train_pooled", c.no_calibration_train_pooled);
    c.include_calibration_in_accuracy =
        j.value("include_calibration_in_accuracy", c.include_calibration_in_accuracy);
    c.save_checkpoints = j.value("save_checkpoints", c.save_checkpoints);
    c.emit_train_logs = j.value("emit_train_logs", c.emit_train_logs);
    c.jobs = j.value("jobs", c.jobs);
    c.out_dir = j.value("out_dir", c.out_dir);
    return c;
}

void ExperimentConfig::validate() const {
    int sources = (data_dir.empty() ? 0 : 1) + (features_csv.empty() ? 0 : 1) +
                  (use_synthetic ? 1 : 0);
    require(sources == 1, ErrorCode::ConfigError,
            "exactly one data source required (data dir, features csv, or synthetic)");
    require(!seeds.empty(), ErrorCode::ConfigError, "at least one seed required");
    require(knockout_concept >= 0 && knockout_concept <= model::kConcepts,
            ErrorCode::ConfigError, "knockout concept must be 0..4");
    train.validate();
}

eval::LosoConfig ExperimentConfig::loso_config() const {
    eval::LosoConfig cfg;
    cfg.strategy = normalize::strategy_from_name(strategy);
    cfg.family = fuzzy::family_from_name(family);
    cfg.no_logic = no_logic;
    cfg.freeze_tau = freeze_tau;
    if (knockout_concept > 0)
        cfg.knockout[static_cast<std::size_t>(knockout_concept - 1)] = true;
    cfg.train = train;
    cfg.epsilon = epsilon;
    cfg.no_calibration_train_pooled = no_calibration_train_pooled;
    cfg.include_calibration_in_accuracy = include_calibration_in_accuracy;
    cfg.jobs = jobs;
    cfg.keep_params = save_checkpoints;
    return cfg;
}

std::vector<features::FeatureWindow> load_windows(const ExperimentConfig& config) {
    config.validate();
    if (!config.features_csv.empty()) return features::read_feature_csv(config.features_csv);
    std::vector<dataio::RecordingSession> cohort;
    if (config.use_synthetic)
        cohort = dataio::generate_synthetic_cohort(config.synthetic);
    else
        cohort = dataio::load_cohort(config.data_dir);
    return features::extract_cohort(cohort);
}

namespace {

void write_meta(const fs::path& dir) {
    // The single place a timestamp lives, so payload files diff clean.
    json meta;
    auto now = std::chrono::system_clock::now();
    meta["generated_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
    std::ofstream out(dir / "meta.json");
    out << meta.dump(2) << '\n';
}

void write_effective_config(const ExperimentConfig& config, const fs::path& dir) {
    std::ofstream out(dir / "effective_config.json");
    if (!out) raise(ErrorCode::IoError, "cannot write effective_config.json");
    out << config.to_json().dump(2) << '\n';
}

}  // namespace

void write_summary_json(const eval::LosoSummary& summary, const ExperimentConfig& config,
                        const fs::path& path) {
    json j;
    j["config"] = config.to_json();
    j["accuracy_mean"] = summary.accuracy_mean;
    j["accuracy_sd"] = summary.accuracy_sd;
    j["ci95"] = {summary.ci_lo, summary.ci_hi};
    j["rule_cohens_d"] = summary.rule_cohens_d;
    j["fidelity_accuracy_r"] = summary.fidelity_accuracy.r;
    j["fidelity_accuracy_p"] = summary.fidelity_accuracy.p;
    j["folds"] = json::array();
    for (const auto& fr : summary.folds) {
        json f;
        f["subject"] = fr.held_out_subject;
        f["seeds"] = fr.seeds;
        f["per_seed_accuracy"] = fr.per_seed_accuracy;
        f["accuracy"] = fr.accuracy;
        f["concept_fidelity"] = fr.concept_fidelity;
        f["rule_fidelity"] = fr.rule_fidelity;
        f["concept_rpb"] = fr.concept_rpb;
        f["rule_discrimination"] = fr.discrimination;
        j["folds"].push_back(std::move(f));
    }
    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_folds_csv(const eval::LosoSummary& summary, const fs::path& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    out << "ID,Acc,C-Fid,R-Fid,R1,R2,R3\n";
    for (const auto& fr : summary.folds) {
        out << fr.held_out_subject << ',' << format_double(fr.accuracy) << ','
            << format_double(fr.concept_fidelity) << ',' << format_double(fr.rule_fidelity);
        for (double d : fr.discrimination) out << ',' << format_double(d);
        out << '\n';
    }
}

void write_traces_csv(const eval::LosoSummary& summary, const fs::path& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    out << "participant_id,seed,window_index,label,yhat,C1,C2,C3,C4,Ct1,Ct2,Ct3,Ct4,f1,f2,f3\n";
    for (const auto& fr : summary.folds) {
        for (const auto& tr : fr.traces) {
            out << tr.participant_id << ',' << tr.seed << ',' << tr.window_index << ','
                << tr.label << ',' << format_double(tr.yhat);
            for (double v : tr.concepts) out << ',' << format_double(v);
            for (double v : tr.soft) out << ',' << format_double(v);
            for (double v : tr.firings) out << ',' << format_double(v);
            out << '\n';
        }
    }
}

eval::LosoSummary run_loso_experiment(const ExperimentConfig& config) {
    config.validate();
    require(!config.out_dir.empty(), ErrorCode::ConfigError, "output directory required");
    fs::create_directories(config.out_dir);

    auto windows = load_windows(config);
    auto summary = eval::run_loso(windows, config.loso_config(), config.seeds);

    fs::path dir(config.out_dir);
    write_effective_config(config, dir);
    write_summary_json(summary, config, dir / "summary.json");
    write_folds_csv(summary, dir / "folds.csv");
    write_traces_csv(summary, dir / "traces.csv");

    if (config.emit_train_logs) {
        fs::create_directories(dir / "logs");
        for (const auto& fr : summary.folds) {
            for (std::size_t si = 0; si < fr.per_seed_logs.size(); ++si) {
                train::write_train_log_csv(
                    fr.per_seed_logs[si],
                    dir / "logs" /
                        ("train_" + fr.held_out_subject + "_" +
                         std::to_string(fr.seeds[si]) + ".csv"));
            }
        }
    }
    if (config.save_checkpoints) {
        fs::create_directories(dir / "checkpoints");
        for (const auto& fr : summary.folds) {
            for (std::size_t si = 0; si < fr.per_seed_params.size(); ++si) {
                model::save_checkpoint(fr.per_seed_params[si],
                                       dir / "checkpoints" /
                                           ("ckpt_" + fr.held_out_subject + "_" +
                                            std::to_string(fr.seeds[si]) + ".json"));
            }
        }
    }
    write_meta(dir);
    return summary;
}

eval::AblationReport run_ablate_experiment(
    const ExperimentConfig& config, const std::vector<eval::AblationSuite>& suites,
    const std::vector<fuzzy::OperatorFamily>& operator_filter) {
    config.validate();
    require(!config.out_dir.empty(), ErrorCode::ConfigError, "output directory required");
    fs::create_directories(config.out_dir);

    auto windows = load_windows(config);
    eval::LosoConfig loso_cfg = config.loso_config();
    loso_cfg.keep_params = true;  // concept suite re-evaluates the base parameters
    auto report = eval::run_ablations(windows, loso_cfg, config.seeds, suites, operator_filter);

    fs::path dir(config.out_dir);
    write_effective_config(config, dir);
    write_summary_json(report.base, config, dir / "summary.json");
    write_folds_csv(report.base, dir / "folds.csv");

    for (const auto& table : report.tables) {
        std::ofstream out(dir / ("ablation_" + table.suite + ".csv"));
        if (!out) raise(ErrorCode::IoError, "cannot write ablation table " + table.suite);
        out << "config,accuracy_mean,accuracy_sd,delta_pp,is_base,wilcoxon_w,wilcoxon_p\n";
        for (const auto& row : table.rows) {
            out << row.label << ',' << format_double(row.accuracy_mean) << ','
                << format_double(row.accuracy_sd) << ',' << format_double(row.delta_pp) << ','
                << (row.is_base ? 1 : 0) << ',' << format_double(row.wilcoxon_w) << ','
                << format_double(row.wilcoxon_p) << '\n';
        }
    }

    if (std::find(suites.begin(), suites.end(), eval::AblationSuite::Thresholds) != suites.end()) {
        json j;
        j["frozen_tau_max_grad"] = report.frozen_tau_max_grad;
        std::ofstream out(dir / "thresholds_audit.json");
        out << j.dump(2) << '\n';
    }
    write_meta(dir);
    return report;
}

std::filesystem::path write_audit_csv(const fs::path& run_dir, const std::string& subject_id) {
    fs::path traces_path = run_dir / "traces.csv";
    std::ifstream in(traces_path);
    if (!in) raise(ErrorCode::IoError, "no traces.csv in " + run_dir.string());

    std::string header;
    std::getline(in, header);

    struct Row {
        long window_index;
        unsigned long long seed;
        std::vector<std::string> cells;
    };
    std::vector<Row> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cells.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        cells.push_back(cur);
        if (cells.size() < 16 || cells[0] != subject_id) continue;
        Row r;
        r.seed = std::stoull(cells[1]);
        r.window_index = std::stol(cells[2]);
        r.cells = std::move(cells);
        rows.push_back(std::move(r));
    }
    if (rows.empty())
        raise(ErrorCode::UnknownSubject, "no traces for subject '" + subject_id + "'");

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.window_index != b.window_index ? a.window_index < b.window_index
                                                : a.seed < b.seed;
    });

    fs::path out_path = run_dir / ("audit_" + subject_id + ".csv");
    std::ofstream out(out_path);
    if (!out) raise(ErrorCode::IoError, "cannot write " + out_path.string());
    // Stored values are copied through verbatim.
    out << "window_index,seed,y,yhat,C1,C2,C3,C4,Ct1,Ct2,Ct3,Ct4,f1,f2,f3\n";
    for (const auto& r : rows) {
        out << r.cells[2] << ',' << r.cells[1] << ',' << r.cells[3];
        for (std::size_t i = 4; i < 16; ++i) out << ',' << r.cells[i];
        out << '\n';
    }
    return out_path;
}

}  // namespace fatigue::experiment
