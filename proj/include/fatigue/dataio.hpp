#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fatigue::dataio {

enum class Phase { AlertBaseline, Induction, PostTask };

std::string phase_name(Phase p);          // "alert" | "induction" | "post"
Phase phase_from_name(const std::string& s);

struct EyeSample {
    double t;      // s
    double gx;     // deg
    double gy;     // deg
    double pupil;  // a.u.
    bool valid;
};

inline constexpr int kFnirsChannels = 8;

struct FnirsSample {
    double t;  // s
    std::array<double, kFnirsChannels> ch;
};

struct PhaseMark {
    double start;  // s, inclusive
    double end;    // s, exclusive
    Phase phase;
};

struct RecordingSession {
    std::string participant_id;
    std::vector<EyeSample> eye;
    std::vector<FnirsSample> fnirs;
    std::vector<PhaseMark> phases;
};

enum class SessionFormat { Csv, Json };

// Loads one session.
//   Csv:  `path` is the manifest_<pid>.json; eye_<pid>.csv and fnirs_<pid>.csv
//         are expected next to it.
//   Json: `path` is a single JSON file holding the whole session.
// Both streams are sorted by timestamp, duplicate timestamps collapsed (first
// kept), and timestamps re-derived from sample index / nominal rate when
// inter-sample jitter exceeds 10% of the nominal period.
RecordingSession load_session(const std::filesystem::path& path, SessionFormat format);

// Writes a session in the 3-file CSV layout into `dir`. Returns the manifest path.
std::filesystem::path save_session_csv(const RecordingSession& session,
                                       const std::filesystem::path& dir);

void save_session_json(const RecordingSession& session, const std::filesystem::path& path);

// Loads every manifest_*.json found in `dir`, sorted by participant id.
std::vector<RecordingSession> load_cohort(const std::filesystem::path& dir);

struct SyntheticCohortSpec {
    int n_subjects = 6;
    int windows_per_phase = 24;
    std::array<double, 4> concept_effect_sizes{1.5, 1.5, 1.5, 1.5};
    double subject_noise_sd = 0.0;
    // When true, subject s gets noise level subject_noise_sd * s / (n-1)
    // instead of the same level for everyone (used for fidelity sweeps).
    bool noise_grade = false;
    double polarity_flips = 0.0;  // per-subject probability of reversing one latent
    std::uint64_t seed = 42;

    void validate() const;
};

// Deterministic cohort: four latent AR(1) drivers per subject shift their mean
// in the post-induction phase by the configured effect sizes; latents drive
// gaze kinematics, gaze dispersion, fNIRS oscillation amplitude, and blink
// behaviour so the downstream feature groups separate the classes.
std::vector<RecordingSession> generate_synthetic_cohort(const SyntheticCohortSpec& spec);

struct WindowSlice {
    std::string participant_id;
    int window_index = 0;
    Phase phase = Phase::AlertBaseline;
    int label = 0;  // 0 alert, 1 fatigued
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<EyeSample> eye;                                // native rate
    std::vector<std::array<double, kFnirsChannels>> fnirs;     // resampled grid
    double fnirs_hz = 10.0;
};

// Cuts alert/post phases into windows of `window_s` seconds with the given
// overlap; fNIRS is linearly resampled onto an `align_hz` grid per window and
// eye samples are kept at native rate. Induction windows are dropped. Windows
// never straddle a phase boundary. Throws PhaseTooShort if a labelled phase is
// shorter than one window.
std::vector<WindowSlice> segment_windows(const RecordingSession& session, double window_s = 10.0,
                                         double overlap = 0.5, double align_hz = 10.0);

// floor((duration - window) / (window * (1 - overlap))) + 1, the count
// segment_windows produces for a phase at least one window long.
int window_count(double phase_duration_s, double window_s, double overlap);

}  // namespace fatigue::dataio
