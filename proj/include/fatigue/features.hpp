#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "fatigue/dataio.hpp"

namespace fatigue::features {

inline constexpr int kPupilDim = 16;
inline constexpr int kOculomotorDim = 18;
inline constexpr int kEyelidDim = 8;
inline constexpr int kFnirsDim = 48;
inline constexpr int kEyeDim = kPupilDim + kOculomotorDim + kEyelidDim;  // 42
inline constexpr int kFeatureDim = kEyeDim + kFnirsDim;                   // 90

enum class FeatureGroup { Pupil, Oculomotor, Eyelid, Fnirs };

struct FeatureSchema {
    struct Entry {
        std::string name;
        FeatureGroup group;
    };
    std::vector<Entry> entries;  // exactly 90, fixed order: vector indexing contract

    int index_of(const std::string& name) const;  // -1 if absent
};

// The process-wide schema. Order defines feature-vector indexing everywhere.
const FeatureSchema& schema();

struct FeatureWindow {
    std::string participant_id;
    int window_index = 0;
    int label = 0;
    dataio::Phase phase = dataio::Phase::AlertBaseline;
    std::array<double, kFeatureDim> values{};
};

struct BlinkEvent {
    double start;     // s
    double end;       // s
    double duration;  // s, includes the 50 ms dilation on both sides
};

struct PupilPreprocessResult {
    std::vector<double> clean;  // blink-interpolated, band-passed, mean restored
    std::vector<BlinkEvent> blinks;
};

// Blink repair + 0.01-4 Hz zero-phase band-pass. Samples below
// median - 2.5 sigma are blink-flagged, regions dilated by 50 ms per side,
// gaps linearly interpolated. The series mean survives filtering so absolute
// pupil size stays meaningful. Throws TooShort (< 2 s of samples) and
// AllBlink (> 80% flagged).
PupilPreprocessResult preprocess_pupil(const std::vector<double>& pupil,
                                       const std::vector<double>& t, double fs);

struct FnirsPreprocessResult {
    // One entry per input channel; pruned channels are empty vectors.
    std::array<std::vector<double>, dataio::kFnirsChannels> channels;
    std::array<bool, dataio::kFnirsChannels> kept{};
    int n_kept = 0;
};

// Flat-channel pruning (sigma < 1e-10) + 0.01-0.2 Hz zero-phase band-pass.
// Throws AllChannelsFlat.
FnirsPreprocessResult preprocess_fnirs(
    const std::vector<std::array<double, dataio::kFnirsChannels>>& samples, double fs);

// Channel-to-region table for the symmetry and regional blocks. Channels are
// 0-based indices into the 8-channel montage.
struct FnirsMontage {
    std::array<int, 4> left{0, 1, 2, 3};
    std::array<int, 4> right{4, 5, 6, 7};
    std::array<int, 4> anterior{0, 1, 4, 5};
    std::array<int, 4> posterior{2, 3, 6, 7};
};

std::array<double, kPupilDim> extract_pupil_features(const std::vector<double>& clean, double fs);

std::array<double, kOculomotorDim> extract_oculomotor_features(
    const std::vector<dataio::EyeSample>& eye, double window_s);

std::array<double, kEyelidDim> extract_eyelid_features(const std::vector<BlinkEvent>& blinks,
                                                       double window_s);

std::array<double, kFnirsDim> extract_fnirs_features(const FnirsPreprocessResult& pre, double fs,
                                                     const FnirsMontage& montage = {});

// Full 90-dim extraction for one window slice. Non-finite values from
// degenerate windows are replaced by 0.
FeatureWindow extract_window(const dataio::WindowSlice& slice);

// Segment + extract a whole cohort. Windows whose preprocessing fails
// (AllBlink, TooFewValidSamples, ...) are skipped; `skipped` (when non-null)
// receives the count.
std::vector<FeatureWindow> extract_cohort(const std::vector<dataio::RecordingSession>& cohort,
                                          int* skipped = nullptr);

// features.csv: 92 columns (90 schema names + participant_id + label), one
// row per window in per-participant window order. This file is the contract
// with every downstream module.
void write_feature_csv(const std::vector<FeatureWindow>& windows,
                       const std::filesystem::path& path);
std::vector<FeatureWindow> read_feature_csv(const std::filesystem::path& path);

}  // namespace fatigue::features
