#include "fatigue/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "fatigue/common.hpp"

namespace fatigue::signal {

std::vector<double> Biquad::apply(const std::vector<double>& x) const {
    std::vector<double> y(x.size());
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double yi = b0 * x[i] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x[i];
        y2 = y1;
        y1 = yi;
        y[i] = yi;
    }
    return y;
}

double Biquad::magnitude(double freq_hz, double fs) const {
    double w = 2.0 * M_PI * freq_hz / fs;
    std::complex<double> z = std::polar(1.0, -w);
    std::complex<double> num = b0 + b1 * z + b2 * z * z;
    std::complex<double> den = 1.0 + a1 * z + a2 * z * z;
    return std::abs(num / den);
}

Biquad butter2_lowpass(double cutoff_hz, double fs) {
    double c = 1.0 / std::tan(M_PI * cutoff_hz / fs);
    double c2 = c * c;
    double s2 = std::sqrt(2.0);
    double a0 = 1.0 + s2 * c + c2;
    Biquad q;
    q.b0 = 1.0 / a0;
    q.b1 = 2.0 / a0;
    q.b2 = 1.0 / a0;
    q.a1 = 2.0 * (1.0 - c2) / a0;
    q.a2 = (1.0 - s2 * c + c2) / a0;
    return q;
}

Biquad butter2_highpass(double cutoff_hz, double fs) {
    double c = std::tan(M_PI * cutoff_hz / fs);
    double c2 = c * c;
    double s2 = std::sqrt(2.0);
    double a0 = 1.0 + s2 * c + c2;
    Biquad q;
    q.b0 = 1.0 / a0;
    q.b1 = -2.0 / a0;
    q.b2 = 1.0 / a0;
    q.a1 = 2.0 * (c2 - 1.0) / a0;
    q.a2 = (1.0 - s2 * c + c2) / a0;
    return q;
}

namespace {

std::vector<double> reversed(std::vector<double> v) {
    std::reverse(v.begin(), v.end());
    return v;
}

std::vector<double> filt_chain(const std::vector<double>& x, const Biquad& hp, const Biquad& lp) {
    return lp.apply(hp.apply(x));
}

}  // namespace

std::vector<double> bandpass_filtfilt(const std::vector<double>& x, double fs,
                                      double lo_hz, double hi_hz) {
    const std::size_t n = x.size();
    if (n < 4) return std::vector<double>(n, 0.0);

    double m = mean(x);
    std::vector<double> xc(n);
    for (std::size_t i = 0; i < n; ++i) xc[i] = x[i] - m;

    Biquad hp = butter2_highpass(lo_hz, fs);
    Biquad lp = butter2_lowpass(hi_hz, fs);

    // Odd reflection padding on both ends.
    std::size_t pad = std::min<std::size_t>(n - 1, 30);
    std::vector<double> padded;
    padded.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) padded.push_back(2.0 * xc[0] - xc[i]);
    padded.insert(padded.end(), xc.begin(), xc.end());
    for (std::size_t i = 2; i <= pad + 1; ++i) padded.push_back(2.0 * xc[n - 1] - xc[n - i]);

    std::vector<double> fwd = filt_chain(padded, hp, lp);
    std::vector<double> bwd = reversed(filt_chain(reversed(std::move(fwd)), hp, lp));

    return std::vector<double>(bwd.begin() + static_cast<long>(pad),
                               bwd.begin() + static_cast<long>(pad + n));
}

Psd welch_psd(const std::vector<double>& x, double fs, std::size_t max_segment) {
    Psd out;
    const std::size_t n = x.size();
    if (n < 4 || fs <= 0.0) return out;

    const std::size_t nseg = std::min(n, max_segment);
    const std::size_t step = std::max<std::size_t>(1, nseg / 2);
    const std::size_t nfreq = nseg / 2 + 1;

    std::vector<double> window(nseg);
    double wss = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                         static_cast<double>(nseg));
        wss += window[i] * window[i];
    }

    std::vector<double> accum(nfreq, 0.0);
    std::size_t count = 0;
    for (std::size_t start = 0; start + nseg <= n; start += step) {
        double segmean = 0.0;
        for (std::size_t i = 0; i < nseg; ++i) segmean += x[start + i];
        segmean /= static_cast<double>(nseg);

        // Direct DFT; nseg <= 256 keeps this cheap.
        for (std::size_t k = 0; k < nfreq; ++k) {
            double re = 0.0, im = 0.0;
            double wk = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(nseg);
            for (std::size_t i = 0; i < nseg; ++i) {
                double v = (x[start + i] - segmean) * window[i];
                double ang = wk * static_cast<double>(i);
                re += v * std::cos(ang);
                im += v * std::sin(ang);
            }
            double p = (re * re + im * im) / (fs * wss);
            if (k != 0 && !(nseg % 2 == 0 && k == nfreq - 1)) p *= 2.0;  // one-sided
            accum[k] += p;
        }
        ++count;
        if (start + nseg == n) break;
    }
    if (count == 0) return out;

    out.df = fs / static_cast<double>(nseg);
    out.freq.resize(nfreq);
    out.power.resize(nfreq);
    double total = 0.0;
    for (std::size_t k = 0; k < nfreq; ++k) {
        out.freq[k] = out.df * static_cast<double>(k);
        out.power[k] = accum[k] / static_cast<double>(count);
        total += out.power[k] * out.df;
    }
    // Rescale so integrated power equals the population variance exactly.
    double var = variance(x);
    if (total > 1e-300 && var > 0.0) {
        double scale = var / total;
        for (double& p : out.power) p *= scale;
    } else {
        std::fill(out.power.begin(), out.power.end(), 0.0);
    }
    return out;
}

double band_power(const Psd& psd, double lo_hz, double hi_hz) {
    double p = 0.0;
    for (std::size_t k = 0; k < psd.freq.size(); ++k) {
        if (psd.freq[k] >= lo_hz && psd.freq[k] < hi_hz) p += psd.power[k] * psd.df;
    }
    return p;
}

double sample_entropy(const std::vector<double>& x, int m, double r) {
    const int n = static_cast<int>(x.size());
    if (n < m + 2 || r <= 0.0) return 0.0;
    const int nt = n - m;  // templates of length m whose m+1 extension exists

    long long count_m = 0, count_m1 = 0;
    for (int i = 0; i < nt - 1; ++i) {
        for (int j = i + 1; j < nt; ++j) {
            double d = 0.0;
            for (int k = 0; k < m; ++k) d = std::max(d, std::fabs(x[i + k] - x[j + k]));
            if (d <= r) {
                ++count_m;
                if (std::fabs(x[i + m] - x[j + m]) <= r) ++count_m1;
            }
        }
    }
    if (count_m == 0 || count_m1 == 0) return 0.0;
    return -std::log(static_cast<double>(count_m1) / static_cast<double>(count_m));
}

double sample_entropy_default(const std::vector<double>& x) {
    return sample_entropy(x, 2, 0.2 * stddev(x));
}

double hurst_rs(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> log_s, log_rs;
    for (std::size_t s = 16; s <= n / 2; s *= 2) {
        const std::size_t blocks = n / s;
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            double bm = 0.0;
            for (std::size_t i = 0; i < s; ++i) bm += x[b * s + i];
            bm /= static_cast<double>(s);
            double cum = 0.0, lo = 0.0, hi = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < s; ++i) {
                double d = x[b * s + i] - bm;
                cum += d;
                lo = std::min(lo, cum);
                hi = std::max(hi, cum);
                sq += d * d;
            }
            double sd = std::sqrt(sq / static_cast<double>(s));
            if (sd < 1e-12) continue;
            sum += (hi - lo) / sd;
            ++used;
        }
        if (used == 0) continue;
        log_s.push_back(std::log(static_cast<double>(s)));
        log_rs.push_back(std::log(sum / static_cast<double>(used)));
    }
    if (log_s.size() < 2) return 0.5;

    double mx = mean(log_s), my = mean(log_rs);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < log_s.size(); ++i) {
        num += (log_s[i] - mx) * (log_rs[i] - my);
        den += (log_s[i] - mx) * (log_s[i] - mx);
    }
    return den > 0.0 ? num / den : 0.5;
}

double outlier_proportion(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double med = median(x);
    std::vector<double> dev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dev[i] = std::fabs(x[i] - med);
    double mad = median(dev);
    double cut = 3.0 * 1.4826 * mad;
    std::size_t count = 0;
    for (double d : dev) {
        if (d > cut) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(x.size());
}

double linear_slope(const std::vector<double>& y, double dt) {
    const std::size_t n = y.size();
    if (n < 2 || dt <= 0.0) return 0.0;
    double mt = 0.5 * dt * static_cast<double>(n - 1);
    double my = mean(y);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = dt * static_cast<double>(i) - mt;
        num += t * (y[i] - my);
        den += t * t;
    }
    return den > 0.0 ? num / den : 0.0;
}

std::vector<double> interp_linear(const std::vector<double>& xs, const std::vector<double>& ys,
                                  const std::vector<double>& qs) {
    std::vector<double> out(qs.size(), 0.0);
    if (xs.empty()) return out;
    for (std::size_t q = 0; q < qs.size(); ++q) {
        double t = qs[q];
        if (t <= xs.front()) {
            out[q] = ys.front();
            continue;
        }
        if (t >= xs.back()) {
            out[q] = ys.back();
            continue;
        }
        auto it = std::upper_bound(xs.begin(), xs.end(), t);
        std::size_t hi = static_cast<std::size_t>(it - xs.begin());
        std::size_t lo = hi - 1;
        double span = xs[hi] - xs[lo];
        double frac = span > 0.0 ? (t - xs[lo]) / span : 0.0;
        out[q] = ys[lo] + frac * (ys[hi] - ys[lo]);
    }
    return out;
}

}  // namespace fatigue::signal
