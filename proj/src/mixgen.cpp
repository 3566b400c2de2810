#include "choirlab/mixgen.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "choirlab/wav_io.hpp"

namespace choirlab {

namespace {

constexpr double kHopJitterSeconds = 1e-6;

using nlohmann::json;

}  // namespace

void StemManifest::validate() const {
    for (Section s : kAllSections)
        if (stems(s).empty())
            throw std::invalid_argument("StemManifest: section '" + std::string(to_string(s)) +
                                        "' has no stems");
}

StemManifest StemManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("manifest " + path.string() + ": " + e.what());
    }

    StemManifest manifest;
    manifest.piece = doc.value("piece", std::string{});
    if (!doc.contains("sections") || !doc["sections"].is_object())
        throw std::runtime_error("manifest " + path.string() + ": missing 'sections' object");

    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    for (const auto& [key, entries] : doc["sections"].items()) {
        const auto section = section_from_string(key);
        if (!section)
            throw std::runtime_error("manifest " + path.string() + ": unknown section '" + key + "'");
        for (const auto& entry : entries) {
            StemEntry stem;
            stem.singer_id = entry.value("singer_id", std::string{});
            if (!entry.contains("wav_path"))
                throw std::runtime_error("manifest " + path.string() + ": stem without wav_path in '" +
                                         key + "'");
            stem.wav_path = resolve(entry["wav_path"].get<std::string>());
            if (entry.contains("f0_csv_path"))
                stem.f0_csv_path = resolve(entry["f0_csv_path"].get<std::string>());
            manifest.sections[static_cast<std::size_t>(*section)].push_back(std::move(stem));
        }
    }
    manifest.validate();
    return manifest;
}

std::vector<MixSpec> enumerate_quartets(const StemManifest& manifest) {
    manifest.validate();
    std::vector<MixSpec> specs;
    const auto& s = manifest.stems(Section::Soprano);
    const auto& a = manifest.stems(Section::Alto);
    const auto& t = manifest.stems(Section::Tenor);
    const auto& b = manifest.stems(Section::Bass);
    specs.reserve(s.size() * a.size() * t.size() * b.size());
    for (std::size_t is = 0; is < s.size(); ++is)
        for (std::size_t ia = 0; ia < a.size(); ++ia)
            for (std::size_t it = 0; it < t.size(); ++it)
                for (std::size_t ib = 0; ib < b.size(); ++ib) {
                    MixSpec spec;
                    spec.picks[0] = {static_cast<int>(is)};
                    spec.picks[1] = {static_cast<int>(ia)};
                    spec.picks[2] = {static_cast<int>(it)};
                    spec.picks[3] = {static_cast<int>(ib)};
                    spec.name = "quartet_" + std::to_string(is + 1) + std::to_string(ia + 1) +
                                std::to_string(it + 1) + std::to_string(ib + 1);
                    specs.push_back(std::move(spec));
                }
    return specs;
}

MixSpec choir_mix(const StemManifest& manifest) {
    manifest.validate();
    MixSpec spec;
    for (Section s : kAllSections) {
        auto& picks = spec.picks[static_cast<std::size_t>(s)];
        picks.resize(manifest.stems(s).size());
        for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = static_cast<int>(i);
    }
    spec.name = "choir_mix";
    return spec;
}

LoadedStems LoadedStems::load(const StemManifest& manifest) {
    manifest.validate();
    LoadedStems stems;
    for (Section s : kAllSections) {
        for (const StemEntry& entry : manifest.stems(s)) {
            AudioClip clip = load_wav(entry.wav_path);
            if (stems.sample_rate == 0) {
                stems.sample_rate = clip.sample_rate;
            } else if (clip.sample_rate != stems.sample_rate) {
                throw std::runtime_error("stem " + entry.wav_path.string() + " has sample rate " +
                                         std::to_string(clip.sample_rate) + ", expected " +
                                         std::to_string(stems.sample_rate));
            }
            stems.length = std::max(stems.length, clip.size());
            stems.audio[static_cast<std::size_t>(s)].push_back(std::move(clip));

            if (!entry.f0_csv_path.empty())
                stems.f0[static_cast<std::size_t>(s)].push_back(load_f0_track(entry.f0_csv_path));
            else
                stems.f0[static_cast<std::size_t>(s)].emplace_back();
        }
    }
    // zero-pad shorter stems to the longest
    for (auto& section : stems.audio)
        for (AudioClip& clip : section)
            if (clip.size() < stems.length) {
                Eigen::ArrayXd padded = Eigen::ArrayXd::Zero(stems.length);
                padded.head(clip.size()) = clip.samples;
                clip.samples = std::move(padded);
            }
    return stems;
}

namespace {

void check_picks(const LoadedStems& stems, const MixSpec& spec) {
    if (spec.total_selected() == 0) throw std::invalid_argument("MixSpec selects no stems");
    for (Section s : kAllSections)
        for (int idx : spec.picks[static_cast<std::size_t>(s)]) {
            const auto& section = stems.audio[static_cast<std::size_t>(s)];
            if (idx < 0 || static_cast<std::size_t>(idx) >= section.size())
                throw std::invalid_argument("MixSpec picks stem " + std::to_string(idx) +
                                            " in section '" + to_string(s) + "' which has only " +
                                            std::to_string(section.size()) + " stems");
        }
}

}  // namespace

RenderedMix render_mix(const LoadedStems& stems, const MixSpec& spec) {
    check_picks(stems, spec);
    const double gain = 1.0 / spec.total_selected();

    RenderedMix out;
    out.clip.sample_rate = stems.sample_rate;
    out.clip.samples = Eigen::ArrayXd::Zero(stems.length);
    for (Section s : kAllSections)
        for (int idx : spec.picks[static_cast<std::size_t>(s)])
            out.clip.samples += gain * stems.audio[static_cast<std::size_t>(s)][static_cast<std::size_t>(idx)].samples;
    out.peak = stems.length > 0 ? out.clip.samples.abs().maxCoeff() : 0.0;
    return out;
}

RenderedMix render_mix(const StemManifest& manifest, const MixSpec& spec) {
    return render_mix(LoadedStems::load(manifest), spec);
}

MultiF0Sequence companion_truth(const LoadedStems& stems, const MixSpec& spec) {
    check_picks(stems, spec);

    std::vector<const F0Track*> tracks;
    for (Section s : kAllSections)
        for (int idx : spec.picks[static_cast<std::size_t>(s)]) {
            const F0Track& track = stems.f0[static_cast<std::size_t>(s)][static_cast<std::size_t>(idx)];
            if (track.size() == 0)
                throw std::runtime_error("stem " + std::to_string(idx) + " in section '" +
                                         to_string(s) + "' has no f0 track");
            tracks.push_back(&track);
        }

    const double hop = tracks.front()->hop_seconds;
    const double start = tracks.front()->start_seconds;
    Eigen::Index n_frames = 0;
    for (const F0Track* track : tracks) {
        if (std::abs(track->hop_seconds - hop) > kHopJitterSeconds)
            throw std::runtime_error("companion_truth: f0 tracks disagree on hop (" +
                                     std::to_string(track->hop_seconds) + " vs " +
                                     std::to_string(hop) + " s)");
        if (std::abs(track->start_seconds - start) > kHopJitterSeconds)
            throw std::runtime_error("companion_truth: f0 tracks disagree on start time");
        n_frames = std::max(n_frames, track->size());
    }

    MultiF0Sequence seq;
    seq.timestamps.resize(static_cast<std::size_t>(n_frames));
    seq.frames.resize(static_cast<std::size_t>(n_frames));
    for (Eigen::Index n = 0; n < n_frames; ++n) {
        seq.timestamps[static_cast<std::size_t>(n)] = start + static_cast<double>(n) * hop;
        auto& frame = seq.frames[static_cast<std::size_t>(n)];
        for (const F0Track* track : tracks)
            if (n < track->size() && track->voiced(n)) frame.push_back(track->frames[n]);
    }
    return seq;
}

MultiF0Sequence companion_truth(const StemManifest& manifest, const MixSpec& spec) {
    return companion_truth(LoadedStems::load(manifest), spec);
}

}  // namespace choirlab
