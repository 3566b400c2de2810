#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "choirlab/annotations.hpp"
#include "choirlab/audio.hpp"
#include "choirlab/pitch.hpp"
#include "choirlab/section.hpp"
#include "choirlab/stft.hpp"

namespace choirlab {

enum class Whitening { Off, MedianEnvelope };

struct DispersionConfig {
    double search_half_width_cents = 100.0;  // peak search window around the anchor
    double db_drop = 3.0;                    // bandwidth threshold below the peak
    Whitening whitening = Whitening::Off;
    int median_envelope_bins = 201;          // odd; running-median span for whitening
    double ref_hz = kDefaultRefHz;           // reference for absolute cent axes only

    void validate() const;
};

/// One section's measurement at one frame: the interpolated spectral peak
/// (taken as the unison's mean f0) and the -db_drop bandwidth around it.
/// dispersion_cents = 1200*log2(b2_hz/b1_hz) is independent of ref_hz.
struct UnisonEstimate {
    double frame_time = 0.0;
    double anchor_hz = 0.0;
    double mean_f0_hz = 0.0;
    double peak_db = 0.0;  // re frame maximum (whitened scale when enabled)
    double b1_hz = 0.0;
    double b2_hz = 0.0;
    double dispersion_cents = 0.0;
    bool merged = false;  // a crossing was clamped at a neighbouring trough
};

enum class SkipReason {
    UnvoicedAnchor,
    NoAlignedFrame,      // anchor time beyond half a hop from every frame centre
    NoPeakInWindow,
    BandwidthUndefined,  // spectrum never drops db_drop below the peak
    Collision,           // two sections picked the same peak (within 1 cent)
};

const char* to_string(SkipReason reason);

struct FrameSkip {
    double frame_time = 0.0;
    double anchor_hz = 0.0;
    SkipReason reason = SkipReason::UnvoicedAnchor;
};

struct DispersionTrack {
    Section section = Section::Soprano;
    std::vector<UnisonEstimate> estimates;  // ordered by frame_time
    std::vector<FrameSkip> skips;           // ordered by frame_time

    std::map<SkipReason, int> skip_counts() const;
};

/// Converts a linear-magnitude frame to dB re the frame maximum; with
/// MedianEnvelope whitening a running median over median_envelope_bins bins
/// is subtracted. Silent frames come back flat at the dB floor.
Eigen::ArrayXd whiten_frame(const Eigen::ArrayXd& magnitudes, const DispersionConfig& cfg);

struct InterpolatedPeak {
    double freq_hz = 0.0;
    double amp_db = 0.0;
    double bin = 0.0;  // fractional bin position of the vertex
};

/// Parabolic vertex through the dB values at bins k-1, k, k+1 (bin k must
/// be a local maximum). Degenerate flat triples return the bin centre.
InterpolatedPeak interpolate_peak(double alpha_db, double beta_db, double gamma_db, double bin_hz,
                                  Eigen::Index k);

/// Highest local maximum within +-search_half_width_cents of the anchor,
/// parabolically interpolated; nullopt when the window holds no local
/// maximum (e.g. silence).
std::optional<InterpolatedPeak> locate_peak(const Eigen::ArrayXd& db_frame, double bin_hz,
                                            double anchor_hz, const DispersionConfig& cfg);

struct Bandwidth {
    double b1_hz = 0.0;
    double b2_hz = 0.0;
    double dispersion_cents = 0.0;
    bool merged = false;
};

/// Walks outward from the peak to the first crossing of
/// peak.amp_db - db_drop, linearly interpolating the crossing frequency on
/// the dB curve. A rising trough above the threshold clamps the crossing
/// there and sets merged. nullopt when the spectrum never drops below the
/// threshold on one side.
std::optional<Bandwidth> measure_bandwidth(const Eigen::ArrayXd& db_frame, double bin_hz,
                                           const InterpolatedPeak& peak,
                                           const DispersionConfig& cfg);

/// Full per-section analysis: every voiced anchor frame is aligned to the
/// nearest STFT frame (within half a hop), measured, and collision-checked
/// across sections (estimates within 1 cent at the same frame are dropped
/// on both sides). Deterministic; tracks come back in SATB order.
std::vector<DispersionTrack> analyze_unison(const AudioClip& clip,
                                            const std::map<Section, F0Track>& anchors,
                                            const StftConfig& stft_cfg,
                                            const DispersionConfig& disp_cfg);

/// One row per voiced anchor frame per section:
/// section,time,anchor_hz,mean_f0_hz,b1_hz,b2_hz,dispersion_cents,merged,skipped_reason
void write_dispersion_csv(std::ostream& out, const std::vector<DispersionTrack>& tracks);
void write_dispersion_csv(const std::filesystem::path& path,
                          const std::vector<DispersionTrack>& tracks);
std::vector<DispersionTrack> read_dispersion_csv(const std::filesystem::path& path);

}  // namespace choirlab
