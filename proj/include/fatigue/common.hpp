#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fatigue {

enum class ErrorCode {
    // dataio
    MissingColumn,
    NonMonotonicTimeUnfixable,
    EmptyPhase,
    InvalidSpec,
    PhaseTooShort,
    IoError,
    // features
    AllBlink,
    AllChannelsFlat,
    TooShort,
    TooFewValidSamples,
    NoChannels,
    // normalize
    InsufficientAlertSamples,
    DimensionMismatch,
    MissingCalibrationData,
    // model / train
    NonFiniteActivation,
    DegenerateBatch,
    MissingTrace,
    SingleClassTraining,
    // eval
    SingleClassSubject,
    TooFewSubjects,
    AllZeroDifferences,
    UnknownSubject,
    // cli
    ConfigError,
};

// Exit-code categories used by the CLI: 2 config, 3 data, 4 numeric.
enum class ErrorCategory { Config = 2, Data = 3, Numeric = 4 };

ErrorCategory error_category(ErrorCode code);
std::string_view error_name(ErrorCode code);

class FatigueError : public std::runtime_error {
public:
    FatigueError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw FatigueError(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw FatigueError(code, what);
}

// Deterministic RNG. mt19937_64 is fully specified by the standard; the
// uniform/normal transforms below are ours, so identical seeds give identical
// streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1].
    double uniform_open() { return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via Box-Muller; one spare cached per pair.
    double normal();
    double normal(double mu, double sd) { return mu + sd * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Child-stream seeds: FNV-1a over (base, tag, index). Used to key per-subject,
// per-fold, per-epoch streams off one experiment seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

// ---- small numeric helpers shared across modules (population conventions) ----

double mean(const std::vector<double>& x);
double variance(const std::vector<double>& x);           // population (divide by n)
double stddev(const std::vector<double>& x);             // population
double skewness(const std::vector<double>& x);            // 0 when sigma == 0
double excess_kurtosis(const std::vector<double>& x);     // 0 when sigma == 0
double median(std::vector<double> x);                     // by value: sorts a copy
double percentile(std::vector<double> x, double p);       // linear interpolation, p in [0,100]
double pearson(const std::vector<double>& x, const std::vector<double>& y);  // 0 when degenerate

// Replace non-finite values by 0 in place. Returns the number replaced.
int sanitize_nonfinite(std::vector<double>& x);

// Round-trip decimal formatting ("%.17g") for report files the audit command
// must re-emit bit-exactly.
std::string format_double(double v);
// Compact formatting for hand-editable data CSVs.
std::string format_double_short(double v);

}  // namespace fatigue
