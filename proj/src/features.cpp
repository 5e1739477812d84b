#include "fatigue/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fatigue/common.hpp"
#include "fatigue/signal.hpp"

namespace fatigue::features {

namespace {

// Pupil spectral bands (Hz).
constexpr double kPupilLfLo = 0.04, kPupilLfHi = 0.15;
constexpr double kPupilHfLo = 0.15, kPupilHfHi = 0.5;
// fNIRS spectral bands (Hz).
constexpr double kFnirsVlfLo = 0.01, kFnirsVlfHi = 0.04;
constexpr double kFnirsLfLo = 0.04, kFnirsLfHi = 0.1;
constexpr double kFnirsHfLo = 0.1, kFnirsHfHi = 0.2;

constexpr double kSaccadeThresholdDegS = 30.0;
constexpr double kBlinkDilationS = 0.05;
constexpr double kFlatChannelSigma = 1e-10;

FeatureSchema build_schema() {
    FeatureSchema s;
    auto add = [&s](const std::string& name, FeatureGroup g) { s.entries.push_back({name, g}); };

    // Pupil (16)
    for (const char* n : {"pupil_mean", "pupil_std", "pupil_range", "pupil_skew", "pupil_kurt",
                          "pupil_d1_absmean", "pupil_d1_absstd", "pupil_d1_absmax",
                          "pupil_d2_absmean", "pupil_d2_absstd", "pupil_d2_absmax",
                          "pupil_lf_power", "pupil_hf_power", "pupil_lf_hf_ratio", "pupil_sampen",
                          "pupil_cv"})
        add(n, FeatureGroup::Pupil);

    // Oculomotor (18)
    for (const char* n :
         {"gaze_std_x", "gaze_std_y", "gaze_corr_xy", "gaze_spatial_entropy", "gaze_vel_mean",
          "gaze_vel_std", "gaze_vel_max", "gaze_vel_p90", "gaze_acc_absmean", "gaze_acc_absstd",
          "gaze_acc_absmax", "saccade_rate", "fixation_prop", "gaze_slope_x", "gaze_slope_y",
          "gaze_angular_change_mean", "gaze_angular_change_std", "gaze_speed_sampen"})
        add(n, FeatureGroup::Oculomotor);

    // Eyelid (8)
    for (const char* n : {"blink_rate", "blink_dur_mean", "blink_dur_std", "blink_ibi_mean",
                          "blink_ibi_std", "perclos_total", "perclos_weighted", "blink_dur_max"})
        add(n, FeatureGroup::Eyelid);

    // fNIRS (48): global 8, spectral 5, regional 24, symmetry 8, complexity 3
    for (const char* n : {"fnirs_gmean_mean", "fnirs_gmean_std", "fnirs_gmean_skew",
                          "fnirs_gmean_range", "fnirs_gd1_mean", "fnirs_gd1_std", "fnirs_gd1_skew",
                          "fnirs_gd1_range", "fnirs_vlf_power", "fnirs_lf_power", "fnirs_hf_power",
                          "fnirs_lf_hf_ratio", "fnirs_vlf_total_ratio"})
        add(n, FeatureGroup::Fnirs);
    for (int roi = 1; roi <= dataio::kFnirsChannels; ++roi) {
        std::string base = "fnirs_roi" + std::to_string(roi);
        add(base + "_mean", FeatureGroup::Fnirs);
        add(base + "_std", FeatureGroup::Fnirs);
        add(base + "_sampen", FeatureGroup::Fnirs);
    }
    for (const char* n : {"fnirs_lr_diff_mean", "fnirs_lr_diff_std", "fnirs_lr_diff_slope",
                          "fnirs_lr_corr", "fnirs_lr_absdiff_mean", "fnirs_ap_contrast_mean",
                          "fnirs_ap_contrast_std", "fnirs_ap_corr", "fnirs_global_sampen",
                          "fnirs_hurst", "fnirs_outlier_prop"})
        add(n, FeatureGroup::Fnirs);

    return s;
}

double safe_ratio(double num, double den) { return den > 1e-300 ? num / den : 0.0; }

std::vector<double> abs_diff_series(const std::vector<double>& x, double fs) {
    std::vector<double> d;
    if (x.size() < 2) return d;
    d.resize(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i) d[i - 1] = std::fabs(x[i] - x[i - 1]) * fs;
    return d;
}

std::vector<double> diff_series(const std::vector<double>& x, double fs) {
    std::vector<double> d;
    if (x.size() < 2) return d;
    d.resize(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i) d[i - 1] = (x[i] - x[i - 1]) * fs;
    return d;
}

double max_or_zero(const std::vector<double>& x) {
    return x.empty() ? 0.0 : *std::max_element(x.begin(), x.end());
}

}  // namespace

int FeatureSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].name == name) return static_cast<int>(i);
    return -1;
}

const FeatureSchema& schema() {
    static const FeatureSchema s = build_schema();
    return s;
}

PupilPreprocessResult preprocess_pupil(const std::vector<double>& pupil,
                                       const std::vector<double>& t, double fs) {
    require(pupil.size() == t.size(), ErrorCode::DimensionMismatch,
            "pupil/time length mismatch");
    require(static_cast<double>(pupil.size()) >= 2.0 * fs, ErrorCode::TooShort,
            "pupil series shorter than 2 s");

    const std::size_t n = pupil.size();
    double med = median(pupil);
    double sd = stddev(pupil);
    double threshold = med - 2.5 * sd;

    std::vector<char> mask(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (pupil[i] < threshold) mask[i] = 1;
    }

    // Dilate flagged regions by 50 ms on each side.
    auto dilate = static_cast<std::size_t>(std::lround(kBlinkDilationS * fs));
    std::vector<char> dilated(mask);
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        std::size_t lo = i > dilate ? i - dilate : 0;
        std::size_t hi = std::min(n - 1, i + dilate);
        for (std::size_t j = lo; j <= hi; ++j) dilated[j] = 1;
    }

    std::size_t flagged = 0;
    for (char c : dilated) flagged += static_cast<std::size_t>(c);
    if (static_cast<double>(flagged) > 0.8 * static_cast<double>(n))
        raise(ErrorCode::AllBlink, std::to_string(flagged) + " of " + std::to_string(n) +
                                       " pupil samples blink-flagged");

    PupilPreprocessResult out;
    std::vector<double> repaired(pupil);
    std::size_t i = 0;
    while (i < n) {
        if (!dilated[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && dilated[j]) ++j;
        // Blink spans samples [i, j); linear fill between the valid neighbours.
        double left = i > 0 ? pupil[i - 1] : pupil[j < n ? j : n - 1];
        double right = j < n ? pupil[j] : left;
        auto span = static_cast<double>(j - i + 1);
        for (std::size_t k = i; k < j; ++k) {
            double frac = static_cast<double>(k - i + 1) / span;
            repaired[k] = left + frac * (right - left);
        }
        BlinkEvent ev;
        ev.start = t[i];
        ev.duration = static_cast<double>(j - i) / fs;
        ev.end = ev.start + ev.duration;
        out.blinks.push_back(ev);
        i = j;
    }

    double dc = mean(repaired);
    out.clean = signal::bandpass_filtfilt(repaired, fs, 0.01, 4.0);
    for (double& v : out.clean) v += dc;
    return out;
}

FnirsPreprocessResult preprocess_fnirs(
    const std::vector<std::array<double, dataio::kFnirsChannels>>& samples, double fs) {
    FnirsPreprocessResult out;
    for (int c = 0; c < dataio::kFnirsChannels; ++c) {
        auto ci = static_cast<std::size_t>(c);
        std::vector<double> series(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) series[i] = samples[i][ci];
        if (stddev(series) < kFlatChannelSigma) {
            out.kept[ci] = false;
            continue;
        }
        double dc = mean(series);
        out.channels[ci] = signal::bandpass_filtfilt(series, fs, 0.01, 0.2);
        for (double& v : out.channels[ci]) v += dc;
        out.kept[ci] = true;
        ++out.n_kept;
    }
    if (out.n_kept == 0) raise(ErrorCode::AllChannelsFlat, "all 8 fNIRS channels flat");
    return out;
}

std::array<double, kPupilDim> extract_pupil_features(const std::vector<double>& clean, double fs) {
    require(clean.size() >= 4, ErrorCode::TooShort, "pupil feature input too short");

    std::array<double, kPupilDim> f{};
    double mu = mean(clean);
    double sd = stddev(clean);
    auto [mn, mx] = std::minmax_element(clean.begin(), clean.end());

    f[0] = mu;
    f[1] = sd;
    f[2] = *mx - *mn;
    f[3] = skewness(clean);
    f[4] = excess_kurtosis(clean);

    std::vector<double> d1 = abs_diff_series(clean, fs);
    std::vector<double> d1_signed = diff_series(clean, fs);
    std::vector<double> d2 = abs_diff_series(d1_signed, fs);
    f[5] = mean(d1);
    f[6] = stddev(d1);
    f[7] = max_or_zero(d1);
    f[8] = mean(d2);
    f[9] = stddev(d2);
    f[10] = max_or_zero(d2);

    // Spectral features describe fluctuation around the mean.
    std::vector<double> centered(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) centered[i] = clean[i] - mu;
    signal::Psd psd = signal::welch_psd(centered, fs);
    double lf = signal::band_power(psd, kPupilLfLo, kPupilLfHi);
    double hf = signal::band_power(psd, kPupilHfLo, kPupilHfHi);
    f[11] = lf;
    f[12] = hf;
    f[13] = safe_ratio(lf, hf);
    f[14] = signal::sample_entropy_default(centered);
    f[15] = safe_ratio(sd, std::fabs(mu));

    return f;
}

std::array<double, kOculomotorDim> extract_oculomotor_features(
    const std::vector<dataio::EyeSample>& eye, double window_s) {
    std::vector<double> xs, ys, ts;
    for (const auto& e : eye) {
        if (!e.valid) continue;
        ts.push_back(e.t);
        xs.push_back(e.gx);
        ys.push_back(e.gy);
    }
    require(!eye.empty() &&
                static_cast<double>(ts.size()) >= 0.5 * static_cast<double>(eye.size()) &&
                ts.size() >= 8,
            ErrorCode::TooFewValidSamples, "less than 50% valid gaze samples");

    std::array<double, kOculomotorDim> f{};
    f[0] = stddev(xs);
    f[1] = stddev(ys);
    f[2] = pearson(xs, ys);

    // Spatial entropy over an 8x8 occupancy grid spanning the bounding box,
    // normalized to [0, 1].
    {
        auto [xmn, xmx] = std::minmax_element(xs.begin(), xs.end());
        auto [ymn, ymx] = std::minmax_element(ys.begin(), ys.end());
        double xr = *xmx - *xmn, yr = *ymx - *ymn;
        std::array<double, 64> grid{};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            int bx = xr > 0 ? std::min(7, static_cast<int>((xs[i] - *xmn) / xr * 8.0)) : 0;
            int by = yr > 0 ? std::min(7, static_cast<int>((ys[i] - *ymn) / yr * 8.0)) : 0;
            grid[static_cast<std::size_t>(by * 8 + bx)] += 1.0;
        }
        double h = 0.0;
        auto total = static_cast<double>(xs.size());
        for (double c : grid) {
            if (c > 0.0) {
                double p = c / total;
                h -= p * std::log(p);
            }
        }
        f[3] = h / std::log(64.0);
    }

    // Velocity between consecutive valid samples, using the actual dt.
    std::vector<double> vel, vel_t;
    for (std::size_t i = 1; i < ts.size(); ++i) {
        double dt = ts[i] - ts[i - 1];
        if (dt <= 0.0) continue;
        double dx = xs[i] - xs[i - 1], dy = ys[i] - ys[i - 1];
        vel.push_back(std::sqrt(dx * dx + dy * dy) / dt);
        vel_t.push_back(ts[i]);
    }
    f[4] = mean(vel);
    f[5] = stddev(vel);
    f[6] = max_or_zero(vel);
    f[7] = percentile(vel, 90.0);

    std::vector<double> acc;
    for (std::size_t i = 1; i < vel.size(); ++i) {
        double dt = vel_t[i] - vel_t[i - 1];
        if (dt <= 0.0) continue;
        acc.push_back(std::fabs(vel[i] - vel[i - 1]) / dt);
    }
    f[8] = mean(acc);
    f[9] = stddev(acc);
    f[10] = max_or_zero(acc);

    // I-VT on 5-sample moving-average velocity: saccade onsets are upward
    // threshold crossings; fixation proportion is the sub-threshold fraction.
    std::vector<double> smooth(vel.size());
    for (std::size_t i = 0; i < vel.size(); ++i) {
        std::size_t lo = i >= 2 ? i - 2 : 0;
        std::size_t hi = std::min(vel.size() - 1, i + 2);
        double s = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) s += vel[j];
        smooth[i] = s / static_cast<double>(hi - lo + 1);
    }
    int saccades = 0;
    std::size_t below = 0;
    bool in_saccade = false;
    for (double v : smooth) {
        if (v >= kSaccadeThresholdDegS) {
            if (!in_saccade) {
                ++saccades;
                in_saccade = true;
            }
        } else {
            in_saccade = false;
            ++below;
        }
    }
    f[11] = static_cast<double>(saccades) / window_s;
    f[12] = smooth.empty() ? 1.0
                           : static_cast<double>(below) / static_cast<double>(smooth.size());

    auto slope_vs_time = [](const std::vector<double>& v, const std::vector<double>& tt) {
        double mt = mean(tt), mv = mean(v);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            num += (tt[i] - mt) * (v[i] - mv);
            den += (tt[i] - mt) * (tt[i] - mt);
        }
        return den > 0.0 ? num / den : 0.0;
    };
    f[13] = slope_vs_time(xs, ts);
    f[14] = slope_vs_time(ys, ts);

    // Angular change between successive displacement vectors.
    std::vector<double> dtheta;
    double prev_angle = 0.0;
    bool have_prev = false;
    for (std::size_t i = 1; i < ts.size(); ++i) {
        double dx = xs[i] - xs[i - 1], dy = ys[i] - ys[i - 1];
        if (dx == 0.0 && dy == 0.0) continue;
        double a = std::atan2(dy, dx);
        if (have_prev) {
            double d = std::fabs(a - prev_angle);
            if (d > M_PI) d = 2.0 * M_PI - d;
            dtheta.push_back(d);
        }
        prev_angle = a;
        have_prev = true;
    }
    f[15] = mean(dtheta);
    f[16] = stddev(dtheta);
    f[17] = signal::sample_entropy_default(vel);

    return f;
}

std::array<double, kEyelidDim> extract_eyelid_features(const std::vector<BlinkEvent>& blinks,
                                                       double window_s) {
    std::array<double, kEyelidDim> f{};
    if (blinks.empty() || window_s <= 0.0) return f;  // all-zero convention

    std::vector<double> durs;
    for (const auto& b : blinks) durs.push_back(b.duration);
    std::vector<double> ibis;
    for (std::size_t i = 1; i < blinks.size(); ++i)
        ibis.push_back(blinks[i].start - blinks[i - 1].start);

    double dur_max = max_or_zero(durs);
    double total = 0.0, weighted = 0.0;
    for (double d : durs) {
        total += d;
        weighted += d * safe_ratio(d, dur_max);
    }

    f[0] = static_cast<double>(blinks.size()) * 60.0 / window_s;  // events/min
    f[1] = mean(durs);
    f[2] = stddev(durs);
    f[3] = mean(ibis);   // 0 by convention for a single blink
    f[4] = stddev(ibis);
    f[5] = total / window_s;
    f[6] = weighted / window_s;
    f[7] = dur_max;
    return f;
}

std::array<double, kFnirsDim> extract_fnirs_features(const FnirsPreprocessResult& pre, double fs,
                                                     const FnirsMontage& montage) {
    require(pre.n_kept > 0, ErrorCode::NoChannels, "no surviving fNIRS channels");

    std::size_t n = 0;
    for (const auto& ch : pre.channels) {
        if (!ch.empty()) {
            n = ch.size();
            break;
        }
    }

    auto region_mean = [&](const std::array<int, 4>& idx) {
        std::vector<double> out(n, 0.0);
        int used = 0;
        for (int c : idx) {
            auto ci = static_cast<std::size_t>(c);
            if (!pre.kept[ci]) continue;
            for (std::size_t i = 0; i < n; ++i) out[i] += pre.channels[ci][i];
            ++used;
        }
        if (used > 0)
            for (double& v : out) v /= static_cast<double>(used);
        return std::pair<std::vector<double>, int>(std::move(out), used);
    };

    // Channel-mean series.
    std::vector<double> g(n, 0.0);
    for (int c = 0; c < dataio::kFnirsChannels; ++c) {
        auto ci = static_cast<std::size_t>(c);
        if (!pre.kept[ci]) continue;
        for (std::size_t i = 0; i < n; ++i) g[i] += pre.channels[ci][i];
    }
    for (double& v : g) v /= static_cast<double>(pre.n_kept);

    std::array<double, kFnirsDim> f{};
    int k = 0;

    auto [gmn, gmx] = std::minmax_element(g.begin(), g.end());
    f[k++] = mean(g);
    f[k++] = stddev(g);
    f[k++] = skewness(g);
    f[k++] = *gmx - *gmn;
    std::vector<double> gd = diff_series(g, fs);
    if (gd.empty()) gd.push_back(0.0);
    auto [dmn, dmx] = std::minmax_element(gd.begin(), gd.end());
    f[k++] = mean(gd);
    f[k++] = stddev(gd);
    f[k++] = skewness(gd);
    f[k++] = *dmx - *dmn;

    std::vector<double> centered(g.size());
    double gmu = mean(g);
    for (std::size_t i = 0; i < g.size(); ++i) centered[i] = g[i] - gmu;
    signal::Psd psd = signal::welch_psd(centered, fs);
    double vlf = signal::band_power(psd, kFnirsVlfLo, kFnirsVlfHi);
    double lf = signal::band_power(psd, kFnirsLfLo, kFnirsLfHi);
    double hf = signal::band_power(psd, kFnirsHfLo, kFnirsHfHi);
    f[k++] = vlf;
    f[k++] = lf;
    f[k++] = hf;
    f[k++] = safe_ratio(lf, hf);
    f[k++] = safe_ratio(vlf, vlf + lf + hf);

    // Regional block: channel-as-ROI; pruned channels emit zeros.
    for (int c = 0; c < dataio::kFnirsChannels; ++c) {
        auto ci = static_cast<std::size_t>(c);
        if (!pre.kept[ci]) {
            k += 3;
            continue;
        }
        const auto& ch = pre.channels[ci];
        f[k++] = mean(ch);
        f[k++] = stddev(ch);
        f[k++] = signal::sample_entropy_default(ch);
    }

    auto [left, nl] = region_mean(montage.left);
    auto [right, nr] = region_mean(montage.right);
    auto [ant, na] = region_mean(montage.anterior);
    auto [post, np] = region_mean(montage.posterior);

    if (nl > 0 && nr > 0) {
        std::vector<double> diff(n), absdiff(n);
        for (std::size_t i = 0; i < n; ++i) {
            diff[i] = left[i] - right[i];
            absdiff[i] = std::fabs(diff[i]);
        }
        f[k++] = mean(diff);
        f[k++] = stddev(diff);
        f[k++] = signal::linear_slope(diff, 1.0 / fs);
        f[k++] = pearson(left, right);
        f[k++] = mean(absdiff);
    } else {
        k += 5;
    }
    if (na > 0 && np > 0) {
        std::vector<double> contrast(n);
        for (std::size_t i = 0; i < n; ++i) contrast[i] = ant[i] - post[i];
        f[k++] = mean(contrast);
        f[k++] = stddev(contrast);
        f[k++] = pearson(ant, post);
    } else {
        k += 3;
    }

    f[k++] = signal::sample_entropy_default(g);
    f[k++] = signal::hurst_rs(g);
    f[k++] = signal::outlier_proportion(g);

    return f;
}

FeatureWindow extract_window(const dataio::WindowSlice& slice) {
    FeatureWindow w;
    w.participant_id = slice.participant_id;
    w.window_index = slice.window_index;
    w.label = slice.label;
    w.phase = slice.phase;

    std::vector<double> pupil, pt;
    for (const auto& e : slice.eye) {
        pupil.push_back(e.pupil);
        pt.push_back(e.t);
    }
    double eye_fs = slice.eye.size() >= 2
                        ? static_cast<double>(slice.eye.size() - 1) /
                              (slice.eye.back().t - slice.eye.front().t)
                        : 0.0;
    require(eye_fs > 0.0, ErrorCode::TooShort, "window holds too few eye samples");

    auto pupil_pre = preprocess_pupil(pupil, pt, eye_fs);
    auto pupil_f = extract_pupil_features(pupil_pre.clean, eye_fs);
    auto oculo_f = extract_oculomotor_features(slice.eye, slice.t_end - slice.t_start);
    auto eyelid_f = extract_eyelid_features(pupil_pre.blinks, slice.t_end - slice.t_start);

    auto fnirs_pre = preprocess_fnirs(slice.fnirs, slice.fnirs_hz);
    auto fnirs_f = extract_fnirs_features(fnirs_pre, slice.fnirs_hz);

    int k = 0;
    for (double v : pupil_f) w.values[static_cast<std::size_t>(k++)] = v;
    for (double v : oculo_f) w.values[static_cast<std::size_t>(k++)] = v;
    for (double v : eyelid_f) w.values[static_cast<std::size_t>(k++)] = v;
    for (double v : fnirs_f) w.values[static_cast<std::size_t>(k++)] = v;

    for (double& v : w.values) {
        if (!std::isfinite(v)) v = 0.0;
    }
    return w;
}

std::vector<FeatureWindow> extract_cohort(const std::vector<dataio::RecordingSession>& cohort,
                                          int* skipped) {
    std::vector<FeatureWindow> out;
    int dropped = 0;
    for (const auto& session : cohort) {
        for (const auto& slice : dataio::segment_windows(session)) {
            try {
                out.push_back(extract_window(slice));
            } catch (const FatigueError& e) {
                if (e.code() == ErrorCode::AllBlink || e.code() == ErrorCode::TooFewValidSamples ||
                    e.code() == ErrorCode::TooShort) {
                    ++dropped;  // unusable window, not a pipeline failure
                } else {
                    throw;
                }
            }
        }
    }
    if (skipped) *skipped = dropped;
    return out;
}

void write_feature_csv(const std::vector<FeatureWindow>& windows,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    const auto& s = schema();
    for (const auto& e : s.entries) out << e.name << ',';
    out << "participant_id,label\n";
    for (const auto& w : windows) {
        for (double v : w.values) out << format_double(v) << ',';
        out << w.participant_id << ',' << w.label << '\n';
    }
}

std::vector<FeatureWindow> read_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) raise(ErrorCode::MissingColumn, "empty feature csv");
    {
        std::stringstream want;
        for (const auto& e : schema().entries) want << e.name << ',';
        want << "participant_id,label";
        std::string trimmed = line;
        if (!trimmed.empty() && trimmed.back() == '\r') trimmed.pop_back();
        if (trimmed != want.str())
            raise(ErrorCode::MissingColumn, path.string() + ": feature csv header mismatch");
    }

    std::vector<FeatureWindow> out;
    std::map<std::string, int> next_index;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        {
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
        }
        if (cells.size() != static_cast<std::size_t>(kFeatureDim) + 2)
            raise(ErrorCode::MissingColumn, path.string() + ": wrong column count");
        FeatureWindow w;
        for (int i = 0; i < kFeatureDim; ++i) {
            try {
                w.values[static_cast<std::size_t>(i)] = std::stod(cells[static_cast<std::size_t>(i)]);
            } catch (const std::exception&) {
                raise(ErrorCode::MissingColumn, path.string() + ": unparsable feature value");
            }
        }
        w.participant_id = cells[kFeatureDim];
        w.label = cells[kFeatureDim + 1] == "1" ? 1 : 0;
        w.phase = w.label == 1 ? dataio::Phase::PostTask : dataio::Phase::AlertBaseline;
        w.window_index = next_index[w.participant_id]++;  // rows are in window order
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace fatigue::features
