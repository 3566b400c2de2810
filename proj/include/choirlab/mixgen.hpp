#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "choirlab/annotations.hpp"
#include "choirlab/audio.hpp"
#include "choirlab/section.hpp"

namespace choirlab {

struct StemEntry {
    std::string singer_id;
    std::filesystem::path wav_path;
    std::filesystem::path f0_csv_path;
};

/// One recorded piece: per-section singer stems plus their f0 tracks.
/// Loaded from JSON ({"piece": ..., "sections": {"soprano": [...], ...}});
/// relative paths resolve against the manifest's directory.
struct StemManifest {
    std::string piece;
    std::array<std::vector<StemEntry>, 4> sections;  // indexed by Section

    const std::vector<StemEntry>& stems(Section s) const {
        return sections[static_cast<std::size_t>(s)];
    }

    static StemManifest load(const std::filesystem::path& path);
    void validate() const;  // every section non-empty
};

/// A selection of stems to mix. Quartets pick exactly one singer per
/// section; the choir mix picks everyone. Every selected stem gets gain
/// 1/(total selected).
struct MixSpec {
    std::array<std::vector<int>, 4> picks;  // stem indices per section
    std::string name;

    int total_selected() const {
        int n = 0;
        for (const auto& p : picks) n += static_cast<int>(p.size());
        return n;
    }
};

/// All quartets, in lexicographic order of (S, A, T, B) stem indices with
/// the bass index varying fastest, i.e. the sorted order of the
/// quartet_<S><A><T><B> names. A 4x4x4x4 manifest yields 256 specs.
std::vector<MixSpec> enumerate_quartets(const StemManifest& manifest);

MixSpec choir_mix(const StemManifest& manifest);

/// Stems decoded once and shared (immutably) across renders.
struct LoadedStems {
    std::array<std::vector<AudioClip>, 4> audio;
    std::array<std::vector<F0Track>, 4> f0;
    int sample_rate = 0;
    Eigen::Index length = 0;  // all stems zero-padded to the longest

    static LoadedStems load(const StemManifest& manifest);
};

struct RenderedMix {
    AudioClip clip;
    double peak = 0.0;  // max |sample| of the rendered mix
};

RenderedMix render_mix(const LoadedStems& stems, const MixSpec& spec);
RenderedMix render_mix(const StemManifest& manifest, const MixSpec& spec);

/// Frame-wise multiset of the selected singers' voiced f0s. All selected
/// tracks must share a hop (within 1e-6 s).
MultiF0Sequence companion_truth(const LoadedStems& stems, const MixSpec& spec);
MultiF0Sequence companion_truth(const StemManifest& manifest, const MixSpec& spec);

}  // namespace choirlab
