#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fatigue/common.hpp"
#include "fatigue/dataio.hpp"

namespace fatigue::dataio {

void SyntheticCohortSpec::validate() const {
    require(n_subjects >= 2, ErrorCode::InvalidSpec, "n_subjects must be >= 2");
    require(windows_per_phase >= 4, ErrorCode::InvalidSpec, "windows_per_phase must be >= 4");
    for (double e : concept_effect_sizes)
        require(std::isfinite(e), ErrorCode::InvalidSpec, "effect sizes must be finite");
    require(subject_noise_sd >= 0.0 && std::isfinite(subject_noise_sd), ErrorCode::InvalidSpec,
            "subject_noise_sd must be a non-negative real");
    require(polarity_flips >= 0.0 && polarity_flips <= 1.0, ErrorCode::InvalidSpec,
            "polarity_flips must be a probability");
}

namespace {

constexpr double kEyeHz = 100.0;    // simulated native eye rate
constexpr double kFnirsHz = 12.5;   // generated off-grid so windowing resamples
constexpr double kLatentHz = 10.0;
constexpr double kArPhi = 0.9;
constexpr double kInductionS = 30.0;

// Four latent drivers. Index meaning:
//   0 gaze kinematics (jitter/saccades), 1 gaze wander, 2 hemodynamic
//   amplitude, 3 cross-modal (blinks + fNIRS asymmetry).
struct Latents {
    std::array<std::vector<double>, 4> z;
    double hz = kLatentHz;

    double at(int k, double t) const {
        const auto& v = z[static_cast<std::size_t>(k)];
        auto i = static_cast<std::size_t>(std::max(0.0, t * hz));
        return v[std::min(i, v.size() - 1)];
    }
};

struct SubjectPlan {
    double noise = 0.0;
    std::array<double, 4> offset{};     // constant per-subject latent offsets
    std::array<double, 4> direction{};  // +1, or -1 for the flipped latent
    double innovation_scale = 1.0;      // (1 + noise): inflates latent SD, shrinking SNR
};

SubjectPlan make_plan(const SyntheticCohortSpec& spec, int subject) {
    SubjectPlan plan;
    double grade = 1.0;
    if (spec.noise_grade && spec.n_subjects > 1)
        grade = static_cast<double>(subject) / static_cast<double>(spec.n_subjects - 1);
    plan.noise = spec.subject_noise_sd * grade;
    plan.innovation_scale = 1.0 + plan.noise;

    Rng rng(derive_seed(spec.seed, "subject_plan", static_cast<std::uint64_t>(subject)));
    for (int k = 0; k < 4; ++k) {
        plan.offset[static_cast<std::size_t>(k)] = rng.normal(0.0, plan.noise);
        plan.direction[static_cast<std::size_t>(k)] = 1.0;
    }
    if (rng.uniform() < spec.polarity_flips) {
        auto k = rng.uniform_int(4);
        plan.direction[k] = -1.0;
    }
    return plan;
}

Latents simulate_latents(const SyntheticCohortSpec& spec, const SubjectPlan& plan, int subject,
                         double alert_end, double post_start, double total_s) {
    Latents lat;
    auto n = static_cast<std::size_t>(std::ceil(total_s * kLatentHz)) + 1;
    const double innovation_sd = plan.innovation_scale * std::sqrt(1.0 - kArPhi * kArPhi);
    for (int k = 0; k < 4; ++k) {
        Rng rng(derive_seed(spec.seed, "latent", static_cast<std::uint64_t>(subject) * 17 +
                                                     static_cast<std::uint64_t>(k)));
        auto& z = lat.z[static_cast<std::size_t>(k)];
        z.resize(n);
        double effect =
            spec.concept_effect_sizes[static_cast<std::size_t>(k)] * plan.direction[static_cast<std::size_t>(k)];
        double prev_dev = rng.normal(0.0, plan.innovation_scale);
        for (std::size_t i = 0; i < n; ++i) {
            double t = static_cast<double>(i) / kLatentHz;
            double m = plan.offset[static_cast<std::size_t>(k)];
            if (t >= post_start)
                m += effect;
            else if (t >= alert_end)
                m += 0.5 * effect;  // induction ramps halfway; those windows are dropped anyway
            double dev = kArPhi * prev_dev + rng.normal(0.0, innovation_sd);
            z[i] = m + dev;
            prev_dev = dev;
        }
    }
    return lat;
}

std::string subject_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "P%02d", index + 1);
    return buf;
}

}  // namespace

std::vector<RecordingSession> generate_synthetic_cohort(const SyntheticCohortSpec& spec) {
    spec.validate();

    const double window_s = 10.0, step_s = 5.0;
    const double phase_s = window_s + step_s * static_cast<double>(spec.windows_per_phase - 1);
    const double alert_end = phase_s;
    const double post_start = alert_end + kInductionS;
    const double total_s = post_start + phase_s;

    std::vector<RecordingSession> cohort;
    cohort.reserve(static_cast<std::size_t>(spec.n_subjects));

    for (int s = 0; s < spec.n_subjects; ++s) {
        SubjectPlan plan = make_plan(spec, s);
        Latents lat = simulate_latents(spec, plan, s, alert_end, post_start, total_s);

        RecordingSession session;
        session.participant_id = subject_id(s);
        session.phases = {{0.0, alert_end, Phase::AlertBaseline},
                          {alert_end, post_start, Phase::Induction},
                          {post_start, total_s, Phase::PostTask}};

        // ---- eye stream: OU wander + jitter + saccades + blinks ----
        Rng eye_rng(derive_seed(spec.seed, "eye", static_cast<std::uint64_t>(s)));
        const double dt = 1.0 / kEyeHz;
        const auto n_eye = static_cast<std::size_t>(std::floor(total_s * kEyeHz));
        session.eye.reserve(n_eye);

        double wx = 0.0, wy = 0.0;      // slow wander (OU)
        double cx = 0.0, cy = 0.0;      // fixation target after saccades
        int blink_left = 0;
        const double ou_pull = 0.4;

        for (std::size_t i = 0; i < n_eye; ++i) {
            double t = static_cast<double>(i) * dt;
            double z_kin = lat.at(0, t), z_wander = lat.at(1, t), z_cross = lat.at(3, t);

            double wander_sd = 0.6 * std::exp(0.35 * z_wander);
            wx += -ou_pull * wx * dt + wander_sd * std::sqrt(dt) * eye_rng.normal();
            wy += -ou_pull * wy * dt + wander_sd * std::sqrt(dt) * eye_rng.normal();

            double saccade_rate = std::min(4.0, 0.8 * std::exp(0.30 * z_kin));
            if (eye_rng.uniform() < saccade_rate * dt) {
                cx = eye_rng.uniform(-8.0, 8.0);
                cy = eye_rng.uniform(-8.0, 8.0);
            }

            double jitter_sd = 0.06 * std::exp(0.45 * z_kin);
            double gx = cx + wx + jitter_sd * eye_rng.normal();
            double gy = cy + wy + jitter_sd * eye_rng.normal();

            double pupil_base = 1000.0;
            double slow = 25.0 * std::exp(0.15 * z_cross) * std::sin(2.0 * M_PI * 0.08 * t);
            double pupil = pupil_base + slow + 4.0 * eye_rng.normal();

            bool valid = true;
            if (blink_left > 0) {
                --blink_left;
                pupil = 0.15 * pupil_base + 2.0 * eye_rng.normal();
                valid = false;
            } else {
                double blink_rate = (14.0 / 60.0) * std::exp(0.30 * z_cross);
                if (eye_rng.uniform() < blink_rate * dt) {
                    double dur = std::max(0.06, 0.12 * std::exp(0.35 * z_cross) +
                                                    eye_rng.normal(0.0, 0.01));
                    blink_left = static_cast<int>(std::lround(dur * kEyeHz));
                }
            }

            session.eye.push_back({t, gx, gy, pupil, valid});
        }

        // ---- fNIRS stream: LF oscillation with latent-driven amplitude ----
        Rng f_rng(derive_seed(spec.seed, "fnirs", static_cast<std::uint64_t>(s)));
        std::array<double, kFnirsChannels> ch_offset{}, ch_phase{}, ar_state{};
        for (int c = 0; c < kFnirsChannels; ++c) {
            ch_offset[static_cast<std::size_t>(c)] = f_rng.normal(0.0, 0.3);
            ch_phase[static_cast<std::size_t>(c)] = f_rng.uniform(0.0, 2.0 * M_PI);
            ar_state[static_cast<std::size_t>(c)] = 0.0;
        }
        const double fdt = 1.0 / kFnirsHz;
        const auto n_f = static_cast<std::size_t>(std::floor(total_s * kFnirsHz));
        session.fnirs.reserve(n_f);
        for (std::size_t i = 0; i < n_f; ++i) {
            double t = static_cast<double>(i) * fdt;
            double z_hemo = lat.at(2, t), z_cross = lat.at(3, t);
            FnirsSample sample;
            sample.t = t;
            for (int c = 0; c < kFnirsChannels; ++c) {
                auto ci = static_cast<std::size_t>(c);
                double amp = 0.8 * std::exp(-0.5 * z_hemo);
                if (c >= kFnirsChannels / 2) amp *= 1.0 + 0.25 * std::tanh(0.5 * z_cross);
                double freq = 0.05 + 0.005 * static_cast<double>(c);
                ar_state[ci] = 0.8 * ar_state[ci] + f_rng.normal(0.0, 0.1);
                sample.ch[ci] = amp * std::sin(2.0 * M_PI * freq * t + ch_phase[ci]) +
                                ar_state[ci] + ch_offset[ci];
            }
            session.fnirs.push_back(sample);
        }

        cohort.push_back(std::move(session));
    }
    return cohort;
}

}  // namespace fatigue::dataio
