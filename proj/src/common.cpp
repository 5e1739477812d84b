#include "fatigue/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fatigue {

ErrorCategory error_category(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidSpec:
        case ErrorCode::MissingCalibrationData:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::TooFewSubjects:
        case ErrorCode::UnknownSubject:
        case ErrorCode::ConfigError:
            return ErrorCategory::Config;
        case ErrorCode::NonFiniteActivation:
        case ErrorCode::DegenerateBatch:
        case ErrorCode::MissingTrace:
            return ErrorCategory::Numeric;
        default:
            return ErrorCategory::Data;
    }
}

std::string_view error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::NonMonotonicTimeUnfixable: return "NonMonotonicTimeUnfixable";
        case ErrorCode::EmptyPhase: return "EmptyPhase";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::PhaseTooShort: return "PhaseTooShort";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::AllBlink: return "AllBlink";
        case ErrorCode::AllChannelsFlat: return "AllChannelsFlat";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::TooFewValidSamples: return "TooFewValidSamples";
        case ErrorCode::NoChannels: return "NoChannels";
        case ErrorCode::InsufficientAlertSamples: return "InsufficientAlertSamples";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::MissingCalibrationData: return "MissingCalibrationData";
        case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
        case ErrorCode::DegenerateBatch: return "DegenerateBatch";
        case ErrorCode::MissingTrace: return "MissingTrace";
        case ErrorCode::SingleClassTraining: return "SingleClassTraining";
        case ErrorCode::SingleClassSubject: return "SingleClassSubject";
        case ErrorCode::TooFewSubjects: return "TooFewSubjects";
        case ErrorCode::AllZeroDifferences: return "AllZeroDifferences";
        case ErrorCode::UnknownSubject: return "UnknownSubject";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    if (n == 0) return 0;
    // Rejection sampling on the top range to avoid modulo bias.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = eng_();
    } while (v >= limit);
    return v % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV offset basis
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    mix(base);
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    mix(index);
    // splitmix64 finalizer for avalanche
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

double mean(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

double stddev(const std::vector<double>& x) { return std::sqrt(variance(x)); }

double skewness(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double m = mean(x);
    double s2 = 0.0, s3 = 0.0;
    for (double v : x) {
        double d = v - m;
        s2 += d * d;
        s3 += d * d * d;
    }
    double n = static_cast<double>(x.size());
    double sd = std::sqrt(s2 / n);
    if (sd < 1e-300) return 0.0;
    return (s3 / n) / (sd * sd * sd);
}

double excess_kurtosis(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double m = mean(x);
    double s2 = 0.0, s4 = 0.0;
    for (double v : x) {
        double d = v - m;
        s2 += d * d;
        s4 += d * d * d * d;
    }
    double n = static_cast<double>(x.size());
    double var = s2 / n;
    if (var < 1e-300) return 0.0;
    return (s4 / n) / (var * var) - 3.0;
}

double median(std::vector<double> x) {
    if (x.empty()) return 0.0;
    std::sort(x.begin(), x.end());
    std::size_t n = x.size();
    if (n % 2 == 1) return x[n / 2];
    return 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

double percentile(std::vector<double> x, double p) {
    if (x.empty()) return 0.0;
    std::sort(x.begin(), x.end());
    if (x.size() == 1) return x[0];
    double rank = p / 100.0 * static_cast<double>(x.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    std::size_t hi = std::min(lo + 1, x.size() - 1);
    double frac = rank - static_cast<double>(lo);
    return x[lo] + frac * (x[hi] - x[lo]);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return 0.0;
    double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double a = x[i] - mx, b = y[i] - my;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if (sxx < 1e-300 || syy < 1e-300) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

int sanitize_nonfinite(std::vector<double>& x) {
    int count = 0;
    for (double& v : x) {
        if (!std::isfinite(v)) {
            v = 0.0;
            ++count;
        }
    }
    return count;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_double_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace fatigue
