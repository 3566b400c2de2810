#pragma once

#include <cstddef>
#include <filesystem>

#include "choirlab/audio.hpp"

namespace choirlab {

/// Reads a RIFF/WAVE file (PCM 16-bit or IEEE float 32-bit, any channel
/// count). Multichannel input is downmixed to mono by the arithmetic mean
/// of the channels; integer samples are scaled by 1/32768.
AudioClip load_wav(const std::filesystem::path& path);

/// Writes a mono 16-bit PCM little-endian file. Samples outside [-1, 1]
/// are hard-clipped; returns the number of clipped samples.
std::size_t write_wav(const AudioClip& clip, const std::filesystem::path& path);

}  // namespace choirlab
