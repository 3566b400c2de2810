#include "choirlab/annotations.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace choirlab {

namespace {

constexpr double kHopJitterSeconds = 1e-6;
constexpr double kVoicedMinHz = 20.0;
constexpr double kVoicedMaxHz = 5000.0;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_number(const std::string& text, const std::filesystem::path& path, std::size_t line_no,
                    const char* what) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    // allow surrounding whitespace only
    while (end && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
    if (end == begin || (end && *end != '\0') || !std::isfinite(value))
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": non-numeric " + what + " '" + text + "'");
    return value;
}

bool looks_like_header(const std::string& line) {
    for (char c : line) {
        if (std::isalpha(static_cast<unsigned char>(c)) && c != 'e' && c != 'E' && c != '+' &&
            c != '-')
            return true;
    }
    return false;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void F0Track::validate() const {
    if (!(hop_seconds > 0.0)) throw std::invalid_argument("F0Track: hop_seconds must be positive");
    for (Eigen::Index n = 0; n < frames.size(); ++n) {
        const double f = frames[n];
        if (!std::isfinite(f)) throw std::invalid_argument("F0Track: non-finite f0 value");
        if (f > 0.0 && (f < kVoicedMinHz || f > kVoicedMaxHz))
            throw std::invalid_argument("F0Track: voiced value " + std::to_string(f) +
                                        " Hz outside [20, 5000]");
    }
}

void MultiF0Sequence::validate() const {
    if (timestamps.size() != frames.size())
        throw std::invalid_argument("MultiF0Sequence: timestamp/frame count mismatch");
    for (std::size_t n = 0; n < timestamps.size(); ++n) {
        if (n > 0 && !(timestamps[n] > timestamps[n - 1]))
            throw std::invalid_argument("MultiF0Sequence: timestamps must be strictly increasing");
        for (double f : frames[n])
            if (!(f > 0.0) || !std::isfinite(f))
                throw std::invalid_argument("MultiF0Sequence: every f0 must be positive and finite");
    }
}

F0Track load_f0_track(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);

    std::vector<double> times;
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    bool first_data_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        if (first_data_row && looks_like_header(line)) {
            first_data_row = false;
            continue;
        }
        first_data_row = false;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected 2 columns (time_sec,f0_hz), got " +
                                     std::to_string(fields.size()));
        times.push_back(parse_number(fields[0], path, line_no, "time_sec"));
        values.push_back(parse_number(fields[1], path, line_no, "f0_hz"));
    }
    if (times.empty()) throw std::runtime_error(path.string() + ": no f0 rows");

    F0Track track;
    if (times.size() == 1) {
        throw std::runtime_error(path.string() + ": need at least 2 rows to infer the hop");
    }
    track.hop_seconds = times[1] - times[0];
    track.start_seconds = times[0];
    if (!(track.hop_seconds > 0.0))
        throw std::runtime_error(path.string() + ": non-increasing timestamps in first two rows");
    for (std::size_t n = 0; n < times.size(); ++n) {
        const double expected = times[0] + static_cast<double>(n) * track.hop_seconds;
        if (std::abs(times[n] - expected) > kHopJitterSeconds)
            throw std::runtime_error(path.string() + ": non-uniform hop at row " +
                                     std::to_string(n + 1) + " (time " + format_double(times[n]) +
                                     ", expected " + format_double(expected) + ")");
    }
    track.frames = Eigen::Map<const Eigen::ArrayXd>(values.data(), values.size());
    track.validate();
    return track;
}

void write_f0_track(const F0Track& track, const std::filesystem::path& path) {
    track.validate();
    std::ofstream out = open_output(path);
    out << "time_sec,f0_hz\n";
    for (Eigen::Index n = 0; n < track.size(); ++n)
        out << format_double(track.time(n)) << ',' << format_double(track.frames[n]) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

MultiF0Sequence load_multif0(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);

    MultiF0Sequence seq;
    std::string line;
    std::size_t line_no = 0;
    bool first_data_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        if (first_data_row && looks_like_header(line)) {
            first_data_row = false;
            continue;
        }
        first_data_row = false;
        const auto fields = split_csv_line(line);
        const double t = parse_number(fields[0], path, line_no, "time_sec");
        if (!seq.timestamps.empty() && !(t > seq.timestamps.back()))
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": non-increasing timestamp " + format_double(t));
        std::vector<double> pitches;
        pitches.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            const double f = parse_number(fields[i], path, line_no, "f0_hz");
            if (!(f > 0.0))
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": non-positive f0 " + format_double(f));
            pitches.push_back(f);
        }
        seq.timestamps.push_back(t);
        seq.frames.push_back(std::move(pitches));
    }
    if (seq.timestamps.empty()) throw std::runtime_error(path.string() + ": no frames");
    return seq;
}

void write_multif0(const MultiF0Sequence& seq, const std::filesystem::path& path) {
    seq.validate();
    std::ofstream out = open_output(path);
    for (std::size_t n = 0; n < seq.size(); ++n) {
        out << format_double(seq.timestamps[n]);
        for (double f : seq.frames[n]) out << ',' << format_double(f);
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace choirlab
