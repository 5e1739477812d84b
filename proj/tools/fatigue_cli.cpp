// Command-line front end for the fatigue classification pipeline.
//
// Subcommands: synth, features, loso, ablate, audit.
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fatigue/experiment.hpp"

namespace {

using fatigue::ErrorCategory;
using fatigue::ErrorCode;
using fatigue::FatigueError;
using fatigue::experiment::ExperimentConfig;
using nlohmann::json;

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
    }
    if (seeds.empty()) throw FatigueError(ErrorCode::ConfigError, "empty seed list");
    return seeds;
}

std::array<double, 4> parse_effects(const std::string& s) {
    std::vector<double> vals;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) vals.push_back(std::stod(tok));
    }
    if (vals.size() == 1) return {vals[0], vals[0], vals[0], vals[0]};
    if (vals.size() != 4)
        throw FatigueError(ErrorCode::ConfigError, "--effects needs 1 or 4 comma-separated values");
    return {vals[0], vals[1], vals[2], vals[3]};
}

// Minimal flat TOML reader for config files: `key = value` lines with
// strings, numbers, booleans and one-line arrays. Values land in a JSON
// object keyed like effective_config.json.
json parse_flat_toml(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FatigueError(ErrorCode::IoError, "cannot open " + path.string());
    json j = json::object();
    json* section = &j;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') {
            std::string name = line.substr(1, line.find(']') - 1);
            j[name] = json::object();
            section = &j[name];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FatigueError(ErrorCode::ConfigError, "bad config line: " + line);
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        std::string val = line.substr(eq + 1);
        val.erase(0, val.find_first_not_of(" \t"));

        auto parse_scalar = [](const std::string& v) -> json {
            if (v == "true") return true;
            if (v == "false") return false;
            if (!v.empty() && v.front() == '"' && v.back() == '"')
                return v.substr(1, v.size() - 2);
            try {
                if (v.find('.') != std::string::npos || v.find('e') != std::string::npos ||
                    v.find('E') != std::string::npos)
                    return std::stod(v);
                return std::stoll(v);
            } catch (const std::exception&) {
                return v;
            }
        };

        if (!val.empty() && val.front() == '[') {
            json arr = json::array();
            std::string inner = val.substr(1, val.rfind(']') - 1);
            std::stringstream ss(inner);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                tok.erase(0, tok.find_first_not_of(" \t"));
                tok.erase(tok.find_last_not_of(" \t") + 1);
                if (!tok.empty()) arr.push_back(parse_scalar(tok));
            }
            (*section)[key] = std::move(arr);
        } else {
            (*section)[key] = parse_scalar(val);
        }
    }
    return j;
}

ExperimentConfig config_from_file(const std::string& path) {
    std::filesystem::path p(path);
    if (p.extension() == ".json") {
        std::ifstream in(p);
        if (!in) throw FatigueError(ErrorCode::IoError, "cannot open " + path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw FatigueError(ErrorCode::ConfigError, path + ": " + e.what());
        }
        return ExperimentConfig::from_json(j);
    }
    return ExperimentConfig::from_json(parse_flat_toml(p));
}

std::string default_out(const std::string& given, const std::string& leaf) {
    if (!given.empty()) return given;
    if (const char* root = std::getenv("FATIGUE_OUT_ROOT")) {
        return (std::filesystem::path(root) / leaf).string();
    }
    throw FatigueError(ErrorCode::ConfigError,
                       "no --out given and FATIGUE_OUT_ROOT is not set");
}

// Flags shared by loso and ablate.
struct RunFlags {
    std::string config_file;
    std::string data_dir;
    std::string features_csv;
    bool synthetic = false;
    int subjects = 6;
    int windows = 24;
    std::string effects = "1.5";
    double noise = 0.0;
    bool noise_grade = false;
    double flips = 0.0;
    std::uint64_t synth_seed = 42;
    std::string strategy = "participant";
    std::string family = "product";
    bool no_logic = false;
    bool freeze_tau = false;
    int knockout = 0;
    std::string seeds = "42,123,456";
    int epochs = 150;
    int batch = 32;
    double lr = 5e-4;
    int patience = 20;
    int jobs = 1;
    std::string out;
    bool save_checkpoints = false;
    bool no_train_logs = false;
    bool pooled_no_calib = false;
    bool exclude_calibration = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config_file, "JSON or TOML config file");
    cmd->add_option("--data", f.data_dir, "directory of recorded sessions");
    cmd->add_option("--features", f.features_csv, "precomputed feature CSV");
    cmd->add_flag("--synthetic", f.synthetic, "generate a synthetic cohort");
    cmd->add_option("--subjects", f.subjects, "synthetic: number of subjects");
    cmd->add_option("--windows", f.windows, "synthetic: windows per phase");
    cmd->add_option("--effects", f.effects, "synthetic: effect sizes (1 or 4 values)");
    cmd->add_option("--noise", f.noise, "synthetic: per-subject noise SD");
    cmd->add_flag("--noise-grade", f.noise_grade, "synthetic: grade noise across subjects");
    cmd->add_option("--flips", f.flips, "synthetic: polarity flip probability");
    cmd->add_option("--synth-seed", f.synth_seed, "synthetic: generator seed");
    cmd->add_option("--strategy", f.strategy, "normalization: global|participant|none")
        ->default_str("participant");
    cmd->add_option("--family", f.family, "operators: product|lukasiewicz|goedel");
    cmd->add_flag("--no-logic", f.no_logic, "replace the rule layer with a linear head");
    cmd->add_flag("--freeze-tau", f.freeze_tau, "fix thresholds at 0.5");
    cmd->add_option("--knockout", f.knockout, "zero concept 1..4 at inference");
    cmd->add_option("--seeds", f.seeds, "comma-separated training seeds");
    cmd->add_option("--epochs", f.epochs, "max training epochs");
    cmd->add_option("--batch", f.batch, "batch size");
    cmd->add_option("--lr", f.lr, "learning rate");
    cmd->add_option("--patience", f.patience, "early-stopping patience");
    cmd->add_option("--jobs", f.jobs, "parallel folds");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_flag("--save-checkpoints", f.save_checkpoints, "write parameter checkpoints");
    cmd->add_flag("--no-train-logs", f.no_train_logs, "skip per-fold training logs");
    cmd->add_flag("--pooled-no-calib", f.pooled_no_calib,
                  "no-calibration variant: pooled stats for training subjects too");
    cmd->add_flag("--exclude-calibration", f.exclude_calibration,
                  "drop calibration windows from accuracy (sensitivity analysis)");
}

ExperimentConfig build_config(const CLI::App* cmd, const RunFlags& f, const std::string& leaf) {
    ExperimentConfig cfg;
    if (!f.config_file.empty()) cfg = config_from_file(f.config_file);

    auto given = [cmd](const std::string& name) { return cmd->count(name) > 0; };
    if (given("--data")) cfg.data_dir = f.data_dir;
    if (given("--features")) cfg.features_csv = f.features_csv;
    if (given("--synthetic")) cfg.use_synthetic = f.synthetic;
    if (given("--subjects")) cfg.synthetic.n_subjects = f.subjects;
    if (given("--windows")) cfg.synthetic.windows_per_phase = f.windows;
    if (given("--effects")) cfg.synthetic.concept_effect_sizes = parse_effects(f.effects);
    if (given("--noise")) cfg.synthetic.subject_noise_sd = f.noise;
    if (given("--noise-grade")) cfg.synthetic.noise_grade = f.noise_grade;
    if (given("--flips")) cfg.synthetic.polarity_flips = f.flips;
    if (given("--synth-seed")) cfg.synthetic.seed = f.synth_seed;
    if (given("--strategy")) cfg.strategy = f.strategy;
    if (given("--family")) cfg.family = f.family;
    if (given("--no-logic")) cfg.no_logic = f.no_logic;
    if (given("--freeze-tau")) cfg.freeze_tau = f.freeze_tau;
    if (given("--knockout")) cfg.knockout_concept = f.knockout;
    if (given("--seeds")) cfg.seeds = parse_seed_list(f.seeds);
    if (given("--epochs")) cfg.train.max_epochs = f.epochs;
    if (given("--batch")) cfg.train.batch_size = f.batch;
    if (given("--lr")) cfg.train.lr = f.lr;
    if (given("--patience")) cfg.train.patience = f.patience;
    if (given("--jobs")) cfg.jobs = f.jobs;
    if (given("--save-checkpoints")) cfg.save_checkpoints = f.save_checkpoints;
    if (given("--no-train-logs")) cfg.emit_train_logs = !f.no_train_logs;
    if (given("--pooled-no-calib")) cfg.no_calibration_train_pooled = f.pooled_no_calib;
    if (given("--exclude-calibration")) cfg.include_calibration_in_accuracy = !f.exclude_calibration;
    if (given("--out") || cfg.out_dir.empty()) cfg.out_dir = default_out(f.out, leaf);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neuro-symbolic fatigue classification pipeline"};
    app.require_subcommand(1);

    // --- synth ---
    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort on disk");
    struct {
        int subjects = 6;
        int windows = 24;
        std::string effects = "1.5";
        double noise = 0.0;
        bool noise_grade = false;
        double flips = 0.0;
        std::uint64_t seed = 42;
        std::string out;
    } sf;
    synth->add_option("--subjects", sf.subjects, "number of subjects")->required();
    synth->add_option("--windows", sf.windows, "windows per phase");
    synth->add_option("--effects", sf.effects, "effect sizes (1 or 4 values)");
    synth->add_option("--noise", sf.noise, "per-subject noise SD");
    synth->add_flag("--noise-grade", sf.noise_grade, "grade noise across subjects");
    synth->add_option("--flips", sf.flips, "polarity flip probability");
    synth->add_option("--seed", sf.seed, "generator seed");
    synth->add_option("--out", sf.out, "output directory");

    // --- features ---
    auto* feat = app.add_subcommand("features", "extract the 90-dim feature matrix");
    struct {
        std::string data_dir;
        std::string out;
    } ff;
    feat->add_option("--data", ff.data_dir, "directory of recorded sessions")->required();
    feat->add_option("--out", ff.out, "output CSV path");

    // --- loso ---
    auto* loso = app.add_subcommand("loso", "leave-one-subject-out evaluation");
    RunFlags lf;
    add_run_flags(loso, lf);

    // --- ablate ---
    auto* ablate = app.add_subcommand("ablate", "ablation suites");
    RunFlags af;
    add_run_flags(ablate, af);
    std::string suites_arg = "normalization,concepts,operators,thresholds";
    std::string operators_arg;
    ablate->add_option("--suites", suites_arg, "subset of suites to run");
    ablate->add_option("--operators", operators_arg,
                       "restrict the operator suite to these families");

    // --- audit ---
    auto* audit = app.add_subcommand("audit", "per-subject trace export from a finished run");
    struct {
        std::string run_dir;
        std::string subject;
    } uf;
    audit->add_option("--run", uf.run_dir, "completed loso output directory")->required();
    audit->add_option("--subject", uf.subject, "participant id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            fatigue::dataio::SyntheticCohortSpec spec;
            spec.n_subjects = sf.subjects;
            spec.windows_per_phase = sf.windows;
            spec.concept_effect_sizes = parse_effects(sf.effects);
            spec.subject_noise_sd = sf.noise;
            spec.noise_grade = sf.noise_grade;
            spec.polarity_flips = sf.flips;
            spec.seed = sf.seed;
            std::string out = default_out(sf.out, "synth");
            auto cohort = fatigue::dataio::generate_synthetic_cohort(spec);
            for (const auto& session : cohort)
                fatigue::dataio::save_session_csv(session, out);
            std::cout << "wrote " << cohort.size() * 3 << " files for " << cohort.size()
                      << " subjects to " << out << "\n";
        } else if (feat->parsed()) {
            auto cohort = fatigue::dataio::load_cohort(ff.data_dir);
            int skipped = 0;
            auto windows = fatigue::features::extract_cohort(cohort, &skipped);
            std::string out = ff.out.empty()
                                  ? (std::filesystem::path(ff.data_dir) / "features.csv").string()
                                  : ff.out;
            fatigue::features::write_feature_csv(windows, out);
            std::cout << "wrote " << windows.size() << " windows (" << skipped
                      << " skipped) to " << out << "\n";
        } else if (loso->parsed()) {
            ExperimentConfig cfg = build_config(loso, lf, "loso");
            auto summary = fatigue::experiment::run_loso_experiment(cfg);
            std::cout << "LOSO accuracy " << summary.accuracy_mean * 100.0 << "% +/- "
                      << summary.accuracy_sd * 100.0 << "% over " << summary.folds.size()
                      << " folds; reports in " << cfg.out_dir << "\n";
        } else if (ablate->parsed()) {
            ExperimentConfig cfg = build_config(ablate, af, "ablate");
            std::vector<fatigue::eval::AblationSuite> suites;
            {
                std::stringstream ss(suites_arg);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    if (tok == "normalization")
                        suites.push_back(fatigue::eval::AblationSuite::Normalization);
                    else if (tok == "concepts")
                        suites.push_back(fatigue::eval::AblationSuite::Concepts);
                    else if (tok == "operators")
                        suites.push_back(fatigue::eval::AblationSuite::Operators);
                    else if (tok == "thresholds")
                        suites.push_back(fatigue::eval::AblationSuite::Thresholds);
                    else if (!tok.empty())
                        throw FatigueError(ErrorCode::ConfigError, "unknown suite " + tok);
                }
            }
            std::vector<fatigue::fuzzy::OperatorFamily> operator_filter;
            if (operators_arg.empty()) {
                operator_filter = {fatigue::fuzzy::OperatorFamily::Product,
                                   fatigue::fuzzy::OperatorFamily::Lukasiewicz,
                                   fatigue::fuzzy::OperatorFamily::Goedel};
            } else {
                std::stringstream ss(operators_arg);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    if (!tok.empty())
                        operator_filter.push_back(fatigue::fuzzy::family_from_name(tok));
                }
            }
            auto report =
                fatigue::experiment::run_ablate_experiment(cfg, suites, operator_filter);
            std::cout << "base accuracy " << report.base.accuracy_mean * 100.0 << "%; "
                      << report.tables.size() << " suite tables in " << cfg.out_dir << "\n";
        } else if (audit->parsed()) {
            auto path = fatigue::experiment::write_audit_csv(uf.run_dir, uf.subject);
            std::cout << "wrote " << path.string() << "\n";
        }
    } catch (const FatigueError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(fatigue::error_category(e.code()));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
