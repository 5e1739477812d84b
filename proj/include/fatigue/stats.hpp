#pragma once

#include <vector>

namespace fatigue::stats {

// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
double incomplete_beta(double a, double b, double x);

// Student t CDF and two-sided survival helpers.
double t_cdf(double t, double df);
double t_two_sided_p(double t, double df);
// Inverse CDF by bisection on t_cdf.
double t_ppf(double p, double df);

// Standard normal CDF.
double normal_cdf(double z);

// Pearson correlation with a two-sided p-value from the t transform
// t = r sqrt((n-2)/(1-r^2)). Degenerate inputs give r = 0, p = 1.
struct Correlation {
    double r = 0.0;
    double p = 1.0;
    int n = 0;
};

Correlation pearson_test(const std::vector<double>& x, const std::vector<double>& y);

// Point-biserial: Pearson against a binary variable (population convention);
// a constant input gives 0.
double point_biserial(const std::vector<double>& x, const std::vector<int>& y);

// d = mean / sample SD (n-1 denominator); 0 when the SD vanishes.
double cohens_d_one_sample(const std::vector<double>& x);

// Wilcoxon signed-rank for paired samples. Zero differences are excluded,
// tied |d| get average ranks, the null distribution is exact for n <= 25
// (dynamic program over doubled ranks) and a continuity-corrected normal
// approximation beyond. Throws AllZeroDifferences when nothing remains.
struct WilcoxonResult {
    double w_plus = 0.0;
    double w_minus = 0.0;
    double w = 0.0;        // min(w_plus, w_minus), the reported statistic
    double p = 1.0;        // two-sided
    double rank_biserial = 0.0;  // |W+ - W-| / (W+ + W-)
    int n = 0;             // pairs after zero exclusion
    bool exact = true;
};

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

// Mean, sample SD and the Student-t 95% confidence interval of a sample.
struct SummaryCI {
    double mean = 0.0;
    double sd = 0.0;  // n-1 denominator
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

SummaryCI mean_ci95(const std::vector<double>& x);

}  // namespace fatigue::stats
