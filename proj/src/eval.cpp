#include "fatigue/eval.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <set>

namespace fatigue::eval {

using features::FeatureWindow;

namespace {

std::vector<std::string> subject_ids(const std::vector<FeatureWindow>& windows) {
    std::set<std::string> ids;
    for (const auto& w : windows) ids.insert(w.participant_id);
    return {ids.begin(), ids.end()};
}

double accuracy_of(const std::vector<TraceRecord>& traces, bool include_calibration) {
    int correct = 0, total = 0;
    for (const auto& tr : traces) {
        if (!include_calibration && tr.label == 0) continue;
        ++total;
        if (static_cast<int>(model::classify(tr.yhat)) == tr.label) ++correct;
    }
    return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

void check_both_classes(const std::vector<TraceRecord>& traces, const char* what) {
    bool has0 = false, has1 = false;
    for (const auto& tr : traces) (tr.label == 1 ? has1 : has0) = true;
    require(has0 && has1, ErrorCode::SingleClassSubject,
            std::string(what) + " needs both classes for the subject");
}

struct FoldInput {
    std::string test_subject;
    std::vector<FeatureWindow> train;
    std::vector<FeatureWindow> test;
};

FoldReport run_fold(const FoldInput& fold, const LosoConfig& config,
                    const std::vector<std::uint64_t>& seeds) {
    FoldReport report;
    report.held_out_subject = fold.test_subject;
    report.seeds = seeds;

    // Normalization: the held-out subject's alert windows are the only test
    // statistics any strategy may consume.
    std::vector<FeatureWindow> test_alert;
    for (const auto& w : fold.test) {
        if (w.label == 0) test_alert.push_back(w);
    }
    normalize::Normalizer norm = normalize::make_strategy(
        config.strategy, fold.train,
        config.strategy == normalize::Strategy::ParticipantAware ? test_alert
                                                                 : std::vector<FeatureWindow>{},
        config.epsilon, config.no_calibration_train_pooled);
    assert_no_leakage(norm, fold.test_subject);

    std::vector<FeatureWindow> train_norm, test_norm;
    train_norm.reserve(fold.train.size());
    for (const auto& w : fold.train) train_norm.push_back(norm(w));
    test_norm.reserve(fold.test.size());
    for (const auto& w : fold.test) test_norm.push_back(norm(w));

    auto [train_idx, val_idx] =
        train::split_train_val(train_norm, config.train.val_fraction, config.train.seed);

    train::ModelSetup setup;
    setup.dims = config.dims;
    setup.family = config.family;
    setup.no_logic = config.no_logic;
    setup.dropout_rate = config.dropout_rate;

    std::array<double, model::kConcepts> rpb_sum{};
    std::array<double, model::kRules> disc_sum{};
    double phi_sum = 0.0, rule_phi_sum = 0.0;

    for (std::uint64_t seed : seeds) {
        train::TrainConfig cfg = config.train;
        cfg.seed = derive_seed(seed, "fold:" + fold.test_subject);
        cfg.freeze_tau = config.freeze_tau;

        std::vector<train::Sample> train_samples, val_samples;
        train_samples.reserve(train_idx.size());
        for (auto i : train_idx) train_samples.push_back(train::to_sample(train_norm[i]));
        val_samples.reserve(val_idx.size());
        for (auto i : val_idx) val_samples.push_back(train::to_sample(train_norm[i]));

        train::TrainResult trained = train::train_model(train_samples, val_samples, cfg, setup);
        report.max_abs_tau_grad = std::max(report.max_abs_tau_grad, trained.max_abs_tau_grad);

        std::vector<TraceRecord> seed_traces;
        seed_traces.reserve(test_norm.size());
        for (const auto& w : test_norm) {
            auto tr = model::forward(trained.best_params, train::to_sample(w).x, false, nullptr,
                                     config.knockout);
            TraceRecord rec;
            rec.participant_id = w.participant_id;
            rec.seed = seed;
            rec.window_index = w.window_index;
            rec.label = w.label;
            rec.yhat = tr.yhat;
            rec.concepts = tr.concepts;
            rec.soft = tr.soft;
            rec.firings = tr.firings;
            seed_traces.push_back(std::move(rec));
        }

        report.per_seed_accuracy.push_back(
            accuracy_of(seed_traces, config.include_calibration_in_accuracy));

        FidelityResult fid = concept_fidelity(seed_traces);
        phi_sum += fid.concept_phi;
        rule_phi_sum += fid.rule_phi;
        for (int i = 0; i < model::kConcepts; ++i)
            rpb_sum[static_cast<std::size_t>(i)] += fid.concept_rpb[static_cast<std::size_t>(i)];
        auto disc = rule_discrimination(seed_traces);
        for (int j = 0; j < model::kRules; ++j)
            disc_sum[static_cast<std::size_t>(j)] += disc[static_cast<std::size_t>(j)];

        report.traces.insert(report.traces.end(), seed_traces.begin(), seed_traces.end());
        if (config.keep_params) report.per_seed_params.push_back(trained.best_params);
        report.per_seed_logs.push_back(trained.log);
    }

    auto n_seeds = static_cast<double>(seeds.size());
    report.accuracy = mean(report.per_seed_accuracy);
    report.concept_fidelity = phi_sum / n_seeds;
    report.rule_fidelity = rule_phi_sum / n_seeds;
    for (double& v : rpb_sum) v /= n_seeds;
    for (double& v : disc_sum) v /= n_seeds;
    report.concept_rpb = rpb_sum;
    report.discrimination = disc_sum;
    return report;
}

}  // namespace

FidelityResult concept_fidelity(const std::vector<TraceRecord>& traces) {
    check_both_classes(traces, "concept fidelity");
    FidelityResult out;
    std::vector<int> y;
    y.reserve(traces.size());
    for (const auto& tr : traces) y.push_back(tr.label);

    std::vector<double> series(traces.size());
    for (int i = 0; i < model::kConcepts; ++i) {
        auto ii = static_cast<std::size_t>(i);
        for (std::size_t n = 0; n < traces.size(); ++n) series[n] = traces[n].concepts[ii];
        out.concept_rpb[ii] = stats::point_biserial(series, y);
        out.concept_phi += std::fabs(out.concept_rpb[ii]);
    }
    out.concept_phi /= static_cast<double>(model::kConcepts);

    for (int j = 0; j < model::kRules; ++j) {
        auto jj = static_cast<std::size_t>(j);
        for (std::size_t n = 0; n < traces.size(); ++n) series[n] = traces[n].firings[jj];
        out.rule_rpb[jj] = stats::point_biserial(series, y);
        out.rule_phi += std::fabs(out.rule_rpb[jj]);
    }
    out.rule_phi /= static_cast<double>(model::kRules);
    return out;
}

std::array<double, model::kRules> rule_discrimination(const std::vector<TraceRecord>& traces) {
    check_both_classes(traces, "rule discrimination");
    std::array<double, model::kRules> sum0{}, sum1{};
    double n0 = 0.0, n1 = 0.0;
    for (const auto& tr : traces) {
        if (tr.label == 1) {
            for (int j = 0; j < model::kRules; ++j)
                sum1[static_cast<std::size_t>(j)] += tr.firings[static_cast<std::size_t>(j)];
            n1 += 1.0;
        } else {
            for (int j = 0; j < model::kRules; ++j)
                sum0[static_cast<std::size_t>(j)] += tr.firings[static_cast<std::size_t>(j)];
            n0 += 1.0;
        }
    }
    std::array<double, model::kRules> d{};
    for (int j = 0; j < model::kRules; ++j) {
        auto jj = static_cast<std::size_t>(j);
        d[jj] = sum1[jj] / n1 - sum0[jj] / n0;
    }
    return d;
}

void assert_no_leakage(const normalize::Normalizer& norm, const std::string& test_subject) {
    for (const auto* prov : norm.provenances()) {
        if (prov->used_fatigued_window_of(test_subject))
            throw std::logic_error("leakage: a normalizer statistic saw a fatigued window of " +
                                   test_subject);
    }
    // Pooled statistics must never see the held-out subject at all.
    if (norm.has_cohort && norm.cohort.provenance.used_any_window_of(test_subject))
        throw std::logic_error("leakage: cohort statistics saw windows of " + test_subject);
    // Training-subject baselines must not be built from held-out windows.
    for (const auto& [pid, stats] : norm.baselines) {
        if (pid != test_subject && stats.provenance.used_any_window_of(test_subject))
            throw std::logic_error("leakage: baseline for " + pid + " saw windows of " +
                                   test_subject);
    }
}

LosoSummary run_loso(const std::vector<FeatureWindow>& windows, const LosoConfig& config,
                     const std::vector<std::uint64_t>& seeds) {
    require(!seeds.empty(), ErrorCode::ConfigError, "at least one seed required");
    auto subjects = subject_ids(windows);
    require(subjects.size() >= 2, ErrorCode::TooFewSubjects, "LOSO needs >= 2 subjects");

    std::vector<FoldInput> folds(subjects.size());
    for (std::size_t f = 0; f < subjects.size(); ++f) {
        folds[f].test_subject = subjects[f];
        for (const auto& w : windows)
            (w.participant_id == subjects[f] ? folds[f].test : folds[f].train).push_back(w);
    }

    LosoSummary summary;
    summary.folds.resize(folds.size());

    auto run_one = [&](std::size_t f) {
        try {
            summary.folds[f] = run_fold(folds[f], config, seeds);
        } catch (const FatigueError& e) {
            throw FatigueError(e.code(),
                               "fold '" + folds[f].test_subject + "': " + e.what());
        }
    };

    int jobs = std::max(1, config.jobs);
    if (jobs == 1 || folds.size() == 1) {
        for (std::size_t f = 0; f < folds.size(); ++f) run_one(f);
    } else {
        std::vector<std::future<void>> futures;
        std::size_t next = 0;
        while (next < folds.size()) {
            futures.clear();
            for (int j = 0; j < jobs && next < folds.size(); ++j, ++next)
                futures.push_back(std::async(std::launch::async, run_one, next));
            for (auto& fu : futures) fu.get();
        }
    }

    std::vector<double> fold_acc;
    for (const auto& fr : summary.folds) fold_acc.push_back(fr.accuracy);
    auto ci = stats::mean_ci95(fold_acc);
    summary.accuracy_mean = ci.mean;
    summary.accuracy_sd = ci.sd;
    summary.ci_lo = ci.ci_lo;
    summary.ci_hi = ci.ci_hi;

    for (int j = 0; j < model::kRules; ++j) {
        std::vector<double> per_subject;
        for (const auto& fr : summary.folds)
            per_subject.push_back(fr.discrimination[static_cast<std::size_t>(j)]);
        summary.rule_cohens_d[static_cast<std::size_t>(j)] =
            stats::cohens_d_one_sample(per_subject);
    }

    if (summary.folds.size() >= 3) summary.fidelity_accuracy = fidelity_accuracy_correlation(summary);
    return summary;
}

stats::Correlation fidelity_accuracy_correlation(const LosoSummary& summary) {
    require(summary.folds.size() >= 3, ErrorCode::TooFewSubjects,
            "fidelity-accuracy correlation needs >= 3 subjects");
    std::vector<double> phi, acc;
    for (const auto& fr : summary.folds) {
        phi.push_back(fr.concept_fidelity);
        acc.push_back(fr.accuracy);
    }
    return stats::pearson_test(phi, acc);
}

stats::WilcoxonResult paired_comparison(const std::vector<double>& acc_a,
                                        const std::vector<double>& acc_b) {
    return stats::wilcoxon_signed_rank(acc_a, acc_b);
}

namespace {

AblationRow summary_row(const std::string& label, const LosoSummary& summary,
                        const LosoSummary& base, bool is_base) {
    AblationRow row;
    row.label = label;
    row.accuracy_mean = summary.accuracy_mean;
    row.accuracy_sd = summary.accuracy_sd;
    row.delta_pp = (summary.accuracy_mean - base.accuracy_mean) * 100.0;
    row.is_base = is_base;
    if (!is_base && summary.folds.size() == base.folds.size()) {
        std::vector<double> a, b;
        for (std::size_t f = 0; f < base.folds.size(); ++f) {
            a.push_back(summary.folds[f].accuracy);
            b.push_back(base.folds[f].accuracy);
        }
        try {
            auto w = stats::wilcoxon_signed_rank(a, b);
            row.wilcoxon_w = w.w;
            row.wilcoxon_p = w.p;
        } catch (const FatigueError&) {
            // identical accuracies: leave NaN
        }
    }
    return row;
}

// Re-evaluates the base run's trained parameters with a concept zeroed at
// inference; no retraining, matching the knockout protocol.
LosoSummary reevaluate_with_knockout(const std::vector<FeatureWindow>& windows,
                                     const LosoConfig& config,
                                     const std::vector<std::uint64_t>& seeds,
                                     const LosoSummary& base,
                                     const std::array<bool, model::kConcepts>& knockout) {
    LosoSummary out;
    out.folds.resize(base.folds.size());
    for (std::size_t f = 0; f < base.folds.size(); ++f) {
        const auto& base_fold = base.folds[f];
        require(base_fold.per_seed_params.size() == seeds.size(), ErrorCode::MissingTrace,
                "knockout re-evaluation needs retained fold parameters");

        FoldInput fold;
        fold.test_subject = base_fold.held_out_subject;
        for (const auto& w : windows)
            (w.participant_id == fold.test_subject ? fold.test : fold.train).push_back(w);

        std::vector<FeatureWindow> test_alert;
        for (const auto& w : fold.test)
            if (w.label == 0) test_alert.push_back(w);
        normalize::Normalizer norm = normalize::make_strategy(
            config.strategy, fold.train,
            config.strategy == normalize::Strategy::ParticipantAware
                ? test_alert
                : std::vector<FeatureWindow>{},
            config.epsilon, config.no_calibration_train_pooled);

        FoldReport report;
        report.held_out_subject = fold.test_subject;
        report.seeds = seeds;
        for (std::size_t si = 0; si < seeds.size(); ++si) {
            std::vector<TraceRecord> seed_traces;
            for (const auto& w : fold.test) {
                auto nw = norm(w);
                auto tr = model::forward(base_fold.per_seed_params[si],
                                         train::to_sample(nw).x, false, nullptr, knockout);
                TraceRecord rec;
                rec.participant_id = w.participant_id;
                rec.seed = seeds[si];
                rec.window_index = w.window_index;
                rec.label = w.label;
                rec.yhat = tr.yhat;
                rec.concepts = tr.concepts;
                rec.soft = tr.soft;
                rec.firings = tr.firings;
                seed_traces.push_back(std::move(rec));
            }
            report.per_seed_accuracy.push_back(
                accuracy_of(seed_traces, config.include_calibration_in_accuracy));
            report.traces.insert(report.traces.end(), seed_traces.begin(), seed_traces.end());
        }
        report.accuracy = mean(report.per_seed_accuracy);
        out.folds[f] = std::move(report);
    }

    std::vector<double> fold_acc;
    for (const auto& fr : out.folds) fold_acc.push_back(fr.accuracy);
    auto ci = stats::mean_ci95(fold_acc);
    out.accuracy_mean = ci.mean;
    out.accuracy_sd = ci.sd;
    out.ci_lo = ci.ci_lo;
    out.ci_hi = ci.ci_hi;
    return out;
}

}  // namespace

AblationReport run_ablations(const std::vector<FeatureWindow>& windows,
                             const LosoConfig& base_config,
                             const std::vector<std::uint64_t>& seeds,
                             const std::vector<AblationSuite>& suites,
                             const std::vector<fuzzy::OperatorFamily>& operator_filter) {
    AblationReport report;
    LosoConfig base_cfg = base_config;
    base_cfg.keep_params = true;
    report.base = run_loso(windows, base_cfg, seeds);

    for (AblationSuite suite : suites) {
        AblationTable table;
        switch (suite) {
            case AblationSuite::Normalization: {
                table.suite = "normalization";
                for (auto strategy :
                     {normalize::Strategy::Global, normalize::Strategy::ParticipantAware,
                      normalize::Strategy::NoCalibration}) {
                    if (strategy == base_config.strategy) {
                        table.rows.push_back(summary_row(normalize::strategy_name(strategy),
                                                         report.base, report.base, true));
                    } else {
                        LosoConfig cfg = base_config;
                        cfg.strategy = strategy;
                        cfg.keep_params = false;
                        auto run = run_loso(windows, cfg, seeds);
                        table.rows.push_back(summary_row(normalize::strategy_name(strategy), run,
                                                         report.base, false));
                    }
                }
                break;
            }
            case AblationSuite::Concepts: {
                table.suite = "concepts";
                table.rows.push_back(summary_row("full", report.base, report.base, true));
                for (int c = 0; c < model::kConcepts; ++c) {
                    std::array<bool, model::kConcepts> knockout{};
                    knockout[static_cast<std::size_t>(c)] = true;
                    auto run =
                        reevaluate_with_knockout(windows, base_cfg, seeds, report.base, knockout);
                    table.rows.push_back(summary_row("without_C" + std::to_string(c + 1), run,
                                                     report.base, false));
                }
                break;
            }
            case AblationSuite::Operators: {
                table.suite = "operators";
                for (auto family : operator_filter) {
                    if (family == base_config.family) {
                        table.rows.push_back(summary_row(fuzzy::family_name(family), report.base,
                                                         report.base, true));
                    } else {
                        LosoConfig cfg = base_config;
                        cfg.family = family;
                        cfg.keep_params = false;
                        auto run = run_loso(windows, cfg, seeds);
                        table.rows.push_back(
                            summary_row(fuzzy::family_name(family), run, report.base, false));
                    }
                }
                break;
            }
            case AblationSuite::Thresholds: {
                table.suite = "thresholds";
                table.rows.push_back(summary_row("learned", report.base, report.base, true));
                LosoConfig cfg = base_config;
                cfg.freeze_tau = true;
                cfg.keep_params = false;
                auto run = run_loso(windows, cfg, seeds);
                for (const auto& fr : run.folds)
                    report.frozen_tau_max_grad =
                        std::max(report.frozen_tau_max_grad, fr.max_abs_tau_grad);
                table.rows.push_back(summary_row("fixed_tau_0.5", run, report.base, false));
                break;
            }
        }
        report.tables.push_back(std::move(table));
    }
    return report;
}

}  // namespace fatigue::eval
