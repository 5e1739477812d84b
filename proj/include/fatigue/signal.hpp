#pragma once

#include <cstddef>
#include <vector>

namespace fatigue::signal {

// Second-order (biquad) IIR section, direct form I with normalized a0.
struct Biquad {
    double b0, b1, b2, a1, a2;

    std::vector<double> apply(const std::vector<double>& x) const;
    // |H(e^{j 2 pi f / fs})| for one forward pass.
    double magnitude(double freq_hz, double fs) const;
};

Biquad butter2_lowpass(double cutoff_hz, double fs);
Biquad butter2_highpass(double cutoff_hz, double fs);

// Zero-phase band-pass: 2nd-order Butterworth high-pass at `lo` cascaded with
// 2nd-order low-pass at `hi`, run forward and backward over an odd-reflection
// padded copy of the signal (filtfilt). The input mean is removed before
// filtering and NOT restored; callers that need DC add it back.
std::vector<double> bandpass_filtfilt(const std::vector<double>& x, double fs,
                                      double lo_hz, double hi_hz);

// Welch PSD, Hann window, segment length min(n, 256), 50% overlap, constant
// detrend per segment. The averaged periodogram is rescaled so that the total
// integrated power equals the population variance of the input; band powers
// are therefore exact fractions of the variance and disjoint bands can never
// sum past it.
struct Psd {
    std::vector<double> freq;   // bin centers, Hz
    std::vector<double> power;  // density, variance/Hz
    double df = 0.0;
};

Psd welch_psd(const std::vector<double>& x, double fs, std::size_t max_segment = 256);

// Integrated power over [lo_hz, hi_hz).
double band_power(const Psd& psd, double lo_hz, double hi_hz);

// Sample entropy, Chebyshev distance, tolerance r, template length m.
// Template index range is i in [0, n-m-1] for both lengths so the m and m+1
// counts are over the same pairs. Returns 0 when undefined (no matches or
// constant input).
double sample_entropy(const std::vector<double>& x, int m, double r);

// SampEn with the field-standard parameters m = 2, r = 0.2 * population sigma.
double sample_entropy_default(const std::vector<double>& x);

// Rescaled-range Hurst estimate: dyadic block sizes 16, 32, ... up to n/2,
// least-squares slope of log(R/S) against log(size). Returns 0.5 when fewer
// than two usable block sizes exist.
double hurst_rs(const std::vector<double>& x);

// Fraction of samples outside median +/- 3 * 1.4826 * MAD.
double outlier_proportion(const std::vector<double>& x);

// Linear-fit slope of y against equally spaced time steps of `dt` seconds.
double linear_slope(const std::vector<double>& y, double dt);

// Linear interpolation of (xs, ys) onto query points. Query points outside
// the data range clamp to the boundary values.
std::vector<double> interp_linear(const std::vector<double>& xs, const std::vector<double>& ys,
                                  const std::vector<double>& qs);

}  // namespace fatigue::signal
