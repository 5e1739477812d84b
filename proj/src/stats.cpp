#include "fatigue/stats.hpp"

#include <algorithm>
#include <cmath>

#include "fatigue/common.hpp"

namespace fatigue::stats {

namespace {

// Continued fraction for the incomplete beta (Numerical Recipes style Lentz).
double betacf(double a, double b, double x) {
    const int max_iter = 300;
    const double eps = 3e-16, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;  // symmetry for convergence
}

double t_cdf(double t, double df) {
    if (df <= 0.0) return 0.5;
    double x = df / (df + t * t);
    double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

double t_two_sided_p(double t, double df) {
    double p = 2.0 * (1.0 - t_cdf(std::fabs(t), df));
    return std::clamp(p, 0.0, 1.0);
}

double t_ppf(double p, double df) {
    require(p > 0.0 && p < 1.0, ErrorCode::ConfigError, "t_ppf needs p in (0,1)");
    if (p == 0.5) return 0.0;
    double lo = -1e8, hi = 1e8;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (t_cdf(mid, df) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / M_SQRT2); }

Correlation pearson_test(const std::vector<double>& x, const std::vector<double>& y) {
    Correlation out;
    out.n = static_cast<int>(std::min(x.size(), y.size()));
    if (x.size() != y.size() || out.n < 3) return out;
    out.r = pearson(x, y);
    if (out.r == 0.0) {
        out.p = 1.0;
        return out;
    }
    double r2 = std::min(out.r * out.r, 1.0 - 1e-15);
    double df = static_cast<double>(out.n - 2);
    double t = out.r * std::sqrt(df / (1.0 - r2));
    out.p = t_two_sided_p(t, df);
    return out;
}

double point_biserial(const std::vector<double>& x, const std::vector<int>& y) {
    std::vector<double> yd(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) yd[i] = static_cast<double>(y[i]);
    return pearson(x, yd);
}

double cohens_d_one_sample(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double m = mean(x);
    double sq = 0.0;
    for (double v : x) sq += (v - m) * (v - m);
    double sd = std::sqrt(sq / static_cast<double>(x.size() - 1));
    return sd > 1e-300 ? m / sd : 0.0;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), ErrorCode::DimensionMismatch,
            "paired samples must have equal length");

    struct Diff {
        double absd;
        int sign;
    };
    std::vector<Diff> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back({std::fabs(d), d > 0.0 ? 1 : -1});
    }
    if (diffs.empty())
        raise(ErrorCode::AllZeroDifferences, "all paired differences are zero");

    std::sort(diffs.begin(), diffs.end(),
              [](const Diff& x, const Diff& y) { return x.absd < y.absd; });

    const int n = static_cast<int>(diffs.size());
    // Doubled ranks stay integral under average-rank tie handling.
    std::vector<long> rank2(static_cast<std::size_t>(n));
    std::vector<long> tie_sizes;
    {
        int i = 0;
        while (i < n) {
            int j = i;
            while (j < n && diffs[static_cast<std::size_t>(j)].absd ==
                                diffs[static_cast<std::size_t>(i)].absd)
                ++j;
            long sum2 = 0;  // doubled ranks i+1 .. j
            for (int k = i; k < j; ++k) sum2 += 2L * (k + 1);
            long avg2 = sum2 / (j - i);
            for (int k = i; k < j; ++k) rank2[static_cast<std::size_t>(k)] = avg2;
            if (j - i > 1) tie_sizes.push_back(j - i);
            i = j;
        }
    }

    WilcoxonResult res;
    res.n = n;
    long wplus2 = 0, total2 = 0;
    for (int i = 0; i < n; ++i) {
        total2 += rank2[static_cast<std::size_t>(i)];
        if (diffs[static_cast<std::size_t>(i)].sign > 0) wplus2 += rank2[static_cast<std::size_t>(i)];
    }
    res.w_plus = static_cast<double>(wplus2) / 2.0;
    res.w_minus = static_cast<double>(total2 - wplus2) / 2.0;
    res.w = std::min(res.w_plus, res.w_minus);
    res.rank_biserial = std::fabs(res.w_plus - res.w_minus) / (res.w_plus + res.w_minus);

    if (n <= 25) {
        res.exact = true;
        // Count sign assignments by doubled rank sum.
        std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
        count[0] = 1.0;
        for (int i = 0; i < n; ++i) {
            long r = rank2[static_cast<std::size_t>(i)];
            for (long s = total2; s >= r; --s) count[static_cast<std::size_t>(s)] +=
                count[static_cast<std::size_t>(s - r)];
        }
        double denom = std::pow(2.0, n);
        double p_le = 0.0, p_ge = 0.0;
        for (long s = 0; s <= total2; ++s) {
            if (s <= wplus2) p_le += count[static_cast<std::size_t>(s)];
            if (s >= wplus2) p_ge += count[static_cast<std::size_t>(s)];
        }
        res.p = std::min(1.0, 2.0 * std::min(p_le, p_ge) / denom);
    } else {
        res.exact = false;
        double nn = static_cast<double>(n);
        double mu = nn * (nn + 1.0) / 4.0;
        double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
        for (long t : tie_sizes) {
            double td = static_cast<double>(t);
            var -= (td * td * td - td) / 48.0;
        }
        double sd = std::sqrt(var);
        double w = res.w_plus;
        // Continuity correction toward the mean.
        double z = (w - mu - (w > mu ? 0.5 : w < mu ? -0.5 : 0.0)) / sd;
        res.p = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::fabs(z))));
    }
    return res;
}

SummaryCI mean_ci95(const std::vector<double>& x) {
    SummaryCI out;
    if (x.empty()) return out;
    out.mean = mean(x);
    if (x.size() == 1) {
        out.ci_lo = out.ci_hi = out.mean;
        return out;
    }
    double sq = 0.0;
    for (double v : x) sq += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(sq / static_cast<double>(x.size() - 1));
    double df = static_cast<double>(x.size() - 1);
    double tq = t_ppf(0.975, df);
    double half = tq * out.sd / std::sqrt(static_cast<double>(x.size()));
    out.ci_lo = out.mean - half;
    out.ci_hi = out.mean + half;
    return out;
}

}  // namespace fatigue::stats
