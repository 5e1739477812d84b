#include "fatigue/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fatigue/common.hpp"
#include "fatigue/signal.hpp"

namespace fatigue::dataio {

namespace fs = std::filesystem;
using nlohmann::json;

std::string phase_name(Phase p) {
    switch (p) {
        case Phase::AlertBaseline: return "alert";
        case Phase::Induction: return "induction";
        case Phase::PostTask: return "post";
    }
    return "alert";
}

Phase phase_from_name(const std::string& s) {
    if (s == "alert") return Phase::AlertBaseline;
    if (s == "induction") return Phase::Induction;
    if (s == "post") return Phase::PostTask;
    raise(ErrorCode::MissingColumn, "unknown phase string '" + s + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) raise(ErrorCode::MissingColumn, "trailing junk in " + context);
        return v;
    } catch (const FatigueError&) {
        throw;
    } catch (const std::exception&) {
        raise(ErrorCode::MissingColumn, "unparsable number '" + s + "' in " + context);
    }
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const fs::path& path, const std::vector<std::string>& expected_header) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) raise(ErrorCode::MissingColumn, "empty file " + path.string());
    table.header = split_csv_line(line);
    if (table.header != expected_header) {
        std::string want;
        for (const auto& h : expected_header) want += h + ",";
        raise(ErrorCode::MissingColumn,
              path.filename().string() + ": header mismatch (expected " + want + ")");
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != expected_header.size())
            raise(ErrorCode::MissingColumn, path.filename().string() + ": wrong column count");
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i)
            row[i] = parse_double(cells[i], path.filename().string());
        table.rows.push_back(std::move(row));
    }
    return table;
}

// Sort + dedup + jitter reconstruction shared by both streams. `get_t`/`set_t`
// adapt to the sample type.
template <typename Sample>
void reconstruct_timestamps(std::vector<Sample>& samples, const std::string& what) {
    if (samples.size() < 2) return;

    std::size_t out_of_order = 0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].t <= samples[i - 1].t) ++out_of_order;
    }
    if (static_cast<double>(out_of_order) > 0.01 * static_cast<double>(samples.size()))
        raise(ErrorCode::NonMonotonicTimeUnfixable,
              what + ": " + std::to_string(out_of_order) + " of " +
                  std::to_string(samples.size()) + " samples out of order");

    std::stable_sort(samples.begin(), samples.end(),
                     [](const Sample& a, const Sample& b) { return a.t < b.t; });

    // Collapse duplicate timestamps, keeping the first occurrence.
    std::size_t w = 1;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].t > samples[w - 1].t) samples[w++] = samples[i];
    }
    samples.resize(w);
    if (samples.size() < 2) return;

    std::vector<double> dts(samples.size() - 1);
    for (std::size_t i = 1; i < samples.size(); ++i) dts[i - 1] = samples[i].t - samples[i - 1].t;
    double period = median(dts);
    if (period <= 0.0) raise(ErrorCode::NonMonotonicTimeUnfixable, what + ": zero nominal period");

    double max_jitter = 0.0;
    for (double dt : dts) max_jitter = std::max(max_jitter, std::fabs(dt - period));
    if (max_jitter > 0.1 * period) {
        double t0 = samples.front().t;
        for (std::size_t i = 0; i < samples.size(); ++i)
            samples[i].t = t0 + static_cast<double>(i) * period;
    }
}

std::vector<PhaseMark> parse_phases(const json& j, const std::string& what) {
    std::vector<PhaseMark> phases;
    if (!j.is_array()) raise(ErrorCode::MissingColumn, what + ": phases must be an array");
    for (const auto& p : j) {
        PhaseMark mark;
        mark.start = p.at("start").get<double>();
        mark.end = p.at("end").get<double>();
        mark.phase = phase_from_name(p.at("phase").get<std::string>());
        if (mark.end <= mark.start)
            raise(ErrorCode::EmptyPhase, what + ": phase interval with non-positive length");
        phases.push_back(mark);
    }
    if (phases.empty()) raise(ErrorCode::EmptyPhase, what + ": no phase marks");
    std::sort(phases.begin(), phases.end(),
              [](const PhaseMark& a, const PhaseMark& b) { return a.start < b.start; });
    return phases;
}

int phase_of(const std::vector<PhaseMark>& phases, double t) {
    for (std::size_t i = 0; i < phases.size(); ++i) {
        if (t >= phases[i].start && t < phases[i].end) return static_cast<int>(i);
    }
    return -1;
}

// Drop samples outside every phase and verify each phase holds data.
void finalize_session(RecordingSession& s) {
    reconstruct_timestamps(s.eye, s.participant_id + " eye stream");
    reconstruct_timestamps(s.fnirs, s.participant_id + " fnirs stream");

    std::vector<std::size_t> eye_counts(s.phases.size(), 0), fnirs_counts(s.phases.size(), 0);
    std::vector<EyeSample> eye_kept;
    eye_kept.reserve(s.eye.size());
    for (const auto& e : s.eye) {
        int p = phase_of(s.phases, e.t);
        if (p >= 0) {
            eye_kept.push_back(e);
            ++eye_counts[static_cast<std::size_t>(p)];
        }
    }
    s.eye = std::move(eye_kept);

    std::vector<FnirsSample> fnirs_kept;
    fnirs_kept.reserve(s.fnirs.size());
    for (const auto& f : s.fnirs) {
        int p = phase_of(s.phases, f.t);
        if (p >= 0) {
            fnirs_kept.push_back(f);
            ++fnirs_counts[static_cast<std::size_t>(p)];
        }
    }
    s.fnirs = std::move(fnirs_kept);

    for (std::size_t i = 0; i < s.phases.size(); ++i) {
        if (eye_counts[i] == 0 || fnirs_counts[i] == 0)
            raise(ErrorCode::EmptyPhase, s.participant_id + ": phase '" +
                                             phase_name(s.phases[i].phase) + "' holds no samples");
    }
}

RecordingSession load_session_csv(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) raise(ErrorCode::IoError, "cannot open " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        raise(ErrorCode::MissingColumn, manifest_path.string() + ": " + e.what());
    }

    RecordingSession s;
    s.participant_id = manifest.at("participant_id").get<std::string>();
    s.phases = parse_phases(manifest.at("phases"), manifest_path.filename().string());

    fs::path dir = manifest_path.parent_path();
    CsvTable eye =
        read_csv(dir / ("eye_" + s.participant_id + ".csv"), {"t", "gx", "gy", "pupil", "valid"});
    for (const auto& row : eye.rows)
        s.eye.push_back({row[0], row[1], row[2], row[3], row[4] != 0.0});

    CsvTable fnirs = read_csv(dir / ("fnirs_" + s.participant_id + ".csv"),
                              {"t", "ch1", "ch2", "ch3", "ch4", "ch5", "ch6", "ch7", "ch8"});
    for (const auto& row : fnirs.rows) {
        FnirsSample f;
        f.t = row[0];
        for (int c = 0; c < kFnirsChannels; ++c) f.ch[static_cast<std::size_t>(c)] = row[static_cast<std::size_t>(c) + 1];
        s.fnirs.push_back(f);
    }

    finalize_session(s);
    return s;
}

RecordingSession load_session_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(ErrorCode::MissingColumn, path.string() + ": " + e.what());
    }

    RecordingSession s;
    s.participant_id = j.at("participant_id").get<std::string>();
    s.phases = parse_phases(j.at("phases"), path.filename().string());
    for (const auto& e : j.at("eye")) {
        if (!e.is_array() || e.size() != 5)
            raise(ErrorCode::MissingColumn, path.string() + ": eye rows need 5 values");
        s.eye.push_back({e[0].get<double>(), e[1].get<double>(), e[2].get<double>(),
                         e[3].get<double>(), e[4].get<double>() != 0.0});
    }
    for (const auto& f : j.at("fnirs")) {
        if (!f.is_array() || f.size() != 1 + kFnirsChannels)
            raise(ErrorCode::MissingColumn, path.string() + ": fnirs rows need 9 values");
        FnirsSample fn;
        fn.t = f[0].get<double>();
        for (int c = 0; c < kFnirsChannels; ++c)
            fn.ch[static_cast<std::size_t>(c)] = f[static_cast<std::size_t>(c) + 1].get<double>();
        s.fnirs.push_back(fn);
    }
    finalize_session(s);
    return s;
}

}  // namespace

RecordingSession load_session(const fs::path& path, SessionFormat format) {
    if (!fs::exists(path)) raise(ErrorCode::IoError, "no such file: " + path.string());
    return format == SessionFormat::Csv ? load_session_csv(path) : load_session_json(path);
}

fs::path save_session_csv(const RecordingSession& session, const fs::path& dir) {
    fs::create_directories(dir);
    const std::string& pid = session.participant_id;

    {
        std::ofstream out(dir / ("eye_" + pid + ".csv"));
        if (!out) raise(ErrorCode::IoError, "cannot write eye csv for " + pid);
        out << "t,gx,gy,pupil,valid\n";
        for (const auto& e : session.eye) {
            out << format_double_short(e.t) << ',' << format_double_short(e.gx) << ','
                << format_double_short(e.gy) << ',' << format_double_short(e.pupil) << ','
                << (e.valid ? 1 : 0) << '\n';
        }
    }
    {
        std::ofstream out(dir / ("fnirs_" + pid + ".csv"));
        if (!out) raise(ErrorCode::IoError, "cannot write fnirs csv for " + pid);
        out << "t,ch1,ch2,ch3,ch4,ch5,ch6,ch7,ch8\n";
        for (const auto& f : session.fnirs) {
            out << format_double_short(f.t);
            for (double v : f.ch) out << ',' << format_double_short(v);
            out << '\n';
        }
    }

    json manifest;
    manifest["participant_id"] = pid;
    manifest["phases"] = json::array();
    for (const auto& p : session.phases) {
        manifest["phases"].push_back(
            {{"start", p.start}, {"end", p.end}, {"phase", phase_name(p.phase)}});
    }
    fs::path manifest_path = dir / ("manifest_" + pid + ".json");
    std::ofstream out(manifest_path);
    if (!out) raise(ErrorCode::IoError, "cannot write manifest for " + pid);
    out << manifest.dump(2) << '\n';
    return manifest_path;
}

void save_session_json(const RecordingSession& session, const fs::path& path) {
    json j;
    j["participant_id"] = session.participant_id;
    j["phases"] = json::array();
    for (const auto& p : session.phases)
        j["phases"].push_back({{"start", p.start}, {"end", p.end}, {"phase", phase_name(p.phase)}});
    j["eye"] = json::array();
    for (const auto& e : session.eye)
        j["eye"].push_back({e.t, e.gx, e.gy, e.pupil, e.valid ? 1.0 : 0.0});
    j["fnirs"] = json::array();
    for (const auto& f : session.fnirs) {
        json row = json::array();
        row.push_back(f.t);
        for (double v : f.ch) row.push_back(v);
        j["fnirs"].push_back(row);
    }
    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    out << j.dump() << '\n';
}

std::vector<RecordingSession> load_cohort(const fs::path& dir) {
    if (!fs::is_directory(dir)) raise(ErrorCode::IoError, "not a directory: " + dir.string());
    std::vector<fs::path> manifests;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("manifest_", 0) == 0 && entry.path().extension() == ".json")
            manifests.push_back(entry.path());
    }
    if (manifests.empty()) raise(ErrorCode::IoError, "no manifest_*.json in " + dir.string());
    std::sort(manifests.begin(), manifests.end());
    std::vector<RecordingSession> cohort;
    cohort.reserve(manifests.size());
    for (const auto& m : manifests) cohort.push_back(load_session(m, SessionFormat::Csv));
    return cohort;
}

int window_count(double phase_duration_s, double window_s, double overlap) {
    double step = window_s * (1.0 - overlap);
    if (phase_duration_s < window_s) return 0;
    return static_cast<int>(std::floor((phase_duration_s - window_s) / step + 1e-9)) + 1;
}

std::vector<WindowSlice> segment_windows(const RecordingSession& session, double window_s,
                                         double overlap, double align_hz) {
    require(window_s > 0.0, ErrorCode::InvalidSpec, "window_s must be positive");
    require(overlap >= 0.0 && overlap < 1.0, ErrorCode::InvalidSpec, "overlap must be in [0,1)");
    require(align_hz > 0.0, ErrorCode::InvalidSpec, "align_hz must be positive");

    const double step = window_s * (1.0 - overlap);

    // Per-phase fNIRS sample times for interpolation.
    std::vector<double> ft, fv[kFnirsChannels];
    ft.reserve(session.fnirs.size());
    for (const auto& f : session.fnirs) {
        ft.push_back(f.t);
        for (int c = 0; c < kFnirsChannels; ++c) fv[c].push_back(f.ch[static_cast<std::size_t>(c)]);
    }

    std::vector<WindowSlice> out;
    int next_index = 0;
    for (const auto& mark : session.phases) {
        if (mark.phase == Phase::Induction) continue;  // dropped, never windowed
        double duration = mark.end - mark.start;
        if (duration < window_s)
            raise(ErrorCode::PhaseTooShort,
                  session.participant_id + ": phase '" + phase_name(mark.phase) + "' lasts " +
                      std::to_string(duration) + " s, shorter than one window");

        int n = window_count(duration, window_s, overlap);
        for (int w = 0; w < n; ++w) {
            WindowSlice slice;
            slice.participant_id = session.participant_id;
            slice.window_index = next_index++;
            slice.phase = mark.phase;
            slice.label = mark.phase == Phase::PostTask ? 1 : 0;
            slice.t_start = mark.start + step * static_cast<double>(w);
            slice.t_end = slice.t_start + window_s;
            slice.fnirs_hz = align_hz;

            for (const auto& e : session.eye) {
                if (e.t >= slice.t_start && e.t < slice.t_end) slice.eye.push_back(e);
            }

            int n_grid = static_cast<int>(std::lround(window_s * align_hz));
            std::vector<double> grid(static_cast<std::size_t>(n_grid));
            for (int i = 0; i < n_grid; ++i)
                grid[static_cast<std::size_t>(i)] = slice.t_start + static_cast<double>(i) / align_hz;
            slice.fnirs.resize(static_cast<std::size_t>(n_grid));
            for (int c = 0; c < kFnirsChannels; ++c) {
                auto vals = signal::interp_linear(ft, fv[c], grid);
                for (int i = 0; i < n_grid; ++i)
                    slice.fnirs[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] =
                        vals[static_cast<std::size_t>(i)];
            }
            out.push_back(std::move(slice));
        }
    }
    return out;
}

}  // namespace fatigue::dataio
