#include "choirlab/wav_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace choirlab {

namespace {

// All RIFF fields are little-endian; this code assumes a little-endian host.
static_assert(std::endian::native == std::endian::little, "big-endian hosts unsupported");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatIeeeFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct FmtChunk {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits_per_sample = 0;
};

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
}

template <typename T>
T read_le(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

}  // namespace

AudioClip load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "file not found or unreadable");

    char tag[4];
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "RIFF", 4) != 0) fail(path, "missing RIFF tag");
    (void)read_le<std::uint32_t>(in);  // RIFF size, not trusted
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "WAVE", 4) != 0) fail(path, "missing WAVE tag");

    FmtChunk fmt;
    bool have_fmt = false;
    std::vector<char> data;
    bool have_data = false;

    while (in.read(tag, 4)) {
        const auto chunk_size = read_le<std::uint32_t>(in);
        if (!in) fail(path, "truncated chunk header");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (chunk_size < 16) fail(path, "fmt chunk too small");
            fmt.format = read_le<std::uint16_t>(in);
            fmt.channels = read_le<std::uint16_t>(in);
            fmt.sample_rate = read_le<std::uint32_t>(in);
            (void)read_le<std::uint32_t>(in);  // byte rate
            (void)read_le<std::uint16_t>(in);  // block align
            fmt.bits_per_sample = read_le<std::uint16_t>(in);
            std::uint32_t consumed = 16;
            if (fmt.format == kFormatExtensible && chunk_size >= 16 + 2 + 8) {
                const auto ext_size = read_le<std::uint16_t>(in);
                consumed += 2;
                if (ext_size >= 22) {
                    (void)read_le<std::uint16_t>(in);  // valid bits
                    (void)read_le<std::uint32_t>(in);  // channel mask
                    fmt.format = read_le<std::uint16_t>(in);  // first 2 bytes of the subformat GUID
                    in.ignore(14);
                    consumed += 22;
                }
            }
            in.ignore(chunk_size - consumed + (chunk_size & 1));
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data.resize(chunk_size);
            in.read(data.data(), chunk_size);
            if (!in) fail(path, "truncated data chunk");
            if (chunk_size & 1) in.ignore(1);
            have_data = true;
        } else {
            in.ignore(static_cast<std::streamsize>(chunk_size) + (chunk_size & 1));
        }
    }

    if (!have_fmt) fail(path, "no fmt chunk");
    if (!have_data) fail(path, "no data chunk");
    if (fmt.channels == 0) fail(path, "fmt.channels is zero");
    if (fmt.sample_rate == 0) fail(path, "fmt.sample_rate is zero");

    const std::size_t bytes_per_sample = fmt.bits_per_sample / 8u;
    if (fmt.format == kFormatPcm) {
        if (fmt.bits_per_sample != 16)
            fail(path, "unsupported PCM bit depth " + std::to_string(fmt.bits_per_sample) +
                           " (only 16-bit PCM supported)");
    } else if (fmt.format == kFormatIeeeFloat) {
        if (fmt.bits_per_sample != 32)
            fail(path, "unsupported float bit depth " + std::to_string(fmt.bits_per_sample) +
                           " (only 32-bit float supported)");
    } else {
        fail(path, "unsupported codec, fmt.format = " + std::to_string(fmt.format) +
                       " (only PCM 16-bit and IEEE float 32-bit supported)");
    }

    const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
    if (frame_bytes == 0 || data.size() % frame_bytes != 0)
        fail(path, "data chunk size " + std::to_string(data.size()) +
                       " is not a multiple of the frame size " + std::to_string(frame_bytes));
    const std::size_t n_frames = data.size() / frame_bytes;

    Eigen::ArrayXd samples(static_cast<Eigen::Index>(n_frames));
    const double channel_scale = 1.0 / fmt.channels;
    if (fmt.format == kFormatPcm) {
        const std::int16_t* src = reinterpret_cast<const std::int16_t*>(data.data());
        for (std::size_t i = 0; i < n_frames; ++i) {
            double acc = 0.0;
            for (std::uint16_t c = 0; c < fmt.channels; ++c) acc += src[i * fmt.channels + c];
            samples[static_cast<Eigen::Index>(i)] = acc * channel_scale / 32768.0;
        }
    } else {
        const float* src = reinterpret_cast<const float*>(data.data());
        for (std::size_t i = 0; i < n_frames; ++i) {
            double acc = 0.0;
            for (std::uint16_t c = 0; c < fmt.channels; ++c) acc += src[i * fmt.channels + c];
            samples[static_cast<Eigen::Index>(i)] = acc * channel_scale;
        }
    }

    AudioClip clip;
    clip.samples = std::move(samples);
    clip.sample_rate = static_cast<int>(fmt.sample_rate);
    clip.validate();
    return clip;
}

std::size_t write_wav(const AudioClip& clip, const std::filesystem::path& path) {
    clip.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");

    const std::uint32_t n = static_cast<std::uint32_t>(clip.size());
    const std::uint32_t data_bytes = n * 2;
    const std::uint32_t sample_rate = static_cast<std::uint32_t>(clip.sample_rate);

    auto put16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    auto put32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };

    out.write("RIFF", 4);
    put32(36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put32(16);
    put16(kFormatPcm);
    put16(1);  // mono
    put32(sample_rate);
    put32(sample_rate * 2);  // byte rate
    put16(2);                // block align
    put16(16);               // bits per sample
    out.write("data", 4);
    put32(data_bytes);

    std::size_t clipped = 0;
    std::vector<std::int16_t> pcm(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const double x = clip.samples[static_cast<Eigen::Index>(i)];
        double q = std::lrint(x * 32768.0);
        if (q > 32767.0) {
            q = 32767.0;
            if (x > 1.0) ++clipped;
        } else if (q < -32768.0) {
            q = -32768.0;
            if (x < -1.0) ++clipped;
        }
        pcm[i] = static_cast<std::int16_t>(q);
    }
    out.write(reinterpret_cast<const char*>(pcm.data()), data_bytes);
    if (!out) throw std::runtime_error(path.string() + ": write failed");
    return clipped;
}

}  // namespace choirlab
