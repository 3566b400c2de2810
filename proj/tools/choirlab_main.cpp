// choirlab command-line front end: synth -> mix -> analyze -> evaluate -> report.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "choirlab/annotations.hpp"
#include "choirlab/dispersion.hpp"
#include "choirlab/mfeval.hpp"
#include "choirlab/mixgen.hpp"
#include "choirlab/stats.hpp"
#include "choirlab/synth.hpp"
#include "choirlab/wav_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace choirlab;

namespace {

constexpr const char* kWorkersEnvVar = "CHOIRLAB_WORKERS";

int default_workers() {
    if (const char* env = std::getenv(kWorkersEnvVar)) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(0..n-1) on a bounded pool. Jobs are independent; output files are
// deterministic regardless of the worker count.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex error_mutex;
    std::exception_ptr first_error;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct AnalyzeOptions {
    std::string audio_path;
    std::vector<std::string> anchor_args;  // section=path
    std::string out_path;
    StftConfig stft_cfg;
    DispersionConfig disp_cfg;
    std::string whiten = "off";
};

json run_analyze(const AnalyzeOptions& opt) {
    AnalyzeOptions o = opt;
    if (o.whiten == "off") o.disp_cfg.whitening = Whitening::Off;
    else if (o.whiten == "median") o.disp_cfg.whitening = Whitening::MedianEnvelope;
    else throw CLI::ValidationError("--whiten must be 'off' or 'median'");

    std::map<Section, F0Track> anchors;
    for (const std::string& arg : o.anchor_args) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--anchor expects section=path, got '" + arg + "'");
        const auto section = section_from_string(arg.substr(0, eq));
        if (!section)
            throw CLI::ValidationError("--anchor: unknown section '" + arg.substr(0, eq) + "'");
        if (anchors.count(*section))
            throw CLI::ValidationError("--anchor: section '" + arg.substr(0, eq) + "' given twice");
        anchors[*section] = load_f0_track(arg.substr(eq + 1));
    }

    const AudioClip clip = load_wav(o.audio_path);
    const auto tracks = analyze_unison(clip, anchors, o.stft_cfg, o.disp_cfg);
    write_dispersion_csv(fs::path(o.out_path), tracks);

    json summary;
    summary["out"] = o.out_path;
    summary["sections"] = json::array();
    for (const auto& track : tracks) {
        json sec;
        sec["section"] = to_string(track.section);
        sec["estimates"] = track.estimates.size();
        json skips = json::object();
        for (const auto& [reason, count] : track.skip_counts()) skips[to_string(reason)] = count;
        sec["skips"] = skips;
        summary["sections"].push_back(sec);
    }
    return summary;
}

json eval_report_to_json(const EvalReport& r, double tolerance_cents) {
    json doc;
    doc["tolerance_cents"] = tolerance_cents;
    doc["n_frames"] = r.n_frames;
    doc["n_ref_total"] = r.n_ref_total;
    doc["n_est_total"] = r.n_est_total;
    doc["plain"] = {{"precision", r.precision}, {"recall", r.recall},   {"accuracy", r.accuracy},
                    {"e_sub", r.e_sub},         {"e_miss", r.e_miss},   {"e_fa", r.e_fa},
                    {"e_tot", r.e_tot}};
    doc["chroma"] = {{"precision", r.chroma_precision}, {"recall", r.chroma_recall},
                     {"accuracy", r.chroma_accuracy},   {"e_sub", r.chroma_e_sub},
                     {"e_miss", r.chroma_e_miss},       {"e_fa", r.chroma_e_fa},
                     {"e_tot", r.chroma_e_tot}};
    return doc;
}

UnisonSpec parse_unison_spec(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spec " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("spec " + path.string() + ": " + e.what());
    }
    UnisonSpec spec;
    spec.n_singers = doc.value("n_singers", spec.n_singers);
    spec.center_f0_hz = doc.value("center_f0_hz", spec.center_f0_hz);
    if (doc.contains("detune_cents")) spec.detune_cents = doc["detune_cents"].get<std::vector<double>>();
    else spec.detune_cents.assign(static_cast<std::size_t>(spec.n_singers), 0.0);
    spec.n_harmonics = doc.value("n_harmonics", spec.n_harmonics);
    spec.harmonic_rolloff_db_per_harmonic =
        doc.value("harmonic_rolloff_db_per_harmonic", spec.harmonic_rolloff_db_per_harmonic);
    spec.vibrato_rate_hz = doc.value("vibrato_rate_hz", spec.vibrato_rate_hz);
    spec.vibrato_depth_cents = doc.value("vibrato_depth_cents", spec.vibrato_depth_cents);
    spec.duration_s = doc.value("duration_s", spec.duration_s);
    spec.sample_rate = doc.value("sample_rate", spec.sample_rate);
    if (doc.contains("noise_db") && !doc["noise_db"].is_null())
        spec.noise_db = doc["noise_db"].get<double>();
    spec.truth_hop_s = doc.value("truth_hop_s", 1024.0 / spec.sample_rate);
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"choirlab: unison dispersion analysis and multi-f0 evaluation for SATB recordings"};
    app.require_subcommand(1);

    bool json_output = false;
    int workers = default_workers();
    app.add_flag("--json", json_output, "Emit one JSON document on stdout");
    app.add_option("--workers", workers,
                   "Worker threads for file-level parallelism (default: $" +
                       std::string(kWorkersEnvVar) + " or hardware)")
        ->check(CLI::PositiveNumber);

    // --- analyze ---------------------------------------------------------
    AnalyzeOptions analyze_opt;
    auto* analyze = app.add_subcommand(
        "analyze", "Measure per-section unison dispersion of a mix, guided by f0 anchor tracks");
    analyze->add_option("--audio", analyze_opt.audio_path, "Input WAV (mono or downmixed)")
        ->required()
        ->check(CLI::ExistingFile);
    analyze
        ->add_option("--anchor", analyze_opt.anchor_args,
                     "Per-section anchor f0 CSV as section=path (repeatable; "
                     "sections: soprano/alto/tenor/bass)")
        ->required();
    analyze->add_option("--out", analyze_opt.out_path, "Output dispersion CSV")->required();
    analyze->add_option("--window-size", analyze_opt.stft_cfg.window_size, "Analysis window (samples)")
        ->capture_default_str();
    analyze->add_option("--fft-size", analyze_opt.stft_cfg.fft_size, "FFT size (samples)")
        ->capture_default_str();
    analyze->add_option("--hop-size", analyze_opt.stft_cfg.hop_size, "Hop (samples)")
        ->capture_default_str();
    analyze
        ->add_option("--search-cents", analyze_opt.disp_cfg.search_half_width_cents,
                     "Peak search half-width around the anchor (cents)")
        ->capture_default_str();
    analyze->add_option("--db-drop", analyze_opt.disp_cfg.db_drop, "Bandwidth threshold (dB)")
        ->capture_default_str();
    analyze->add_option("--whiten", analyze_opt.whiten, "Spectral whitening: off|median")
        ->check(CLI::IsMember({"off", "median"}))
        ->capture_default_str();
    analyze
        ->add_option("--median-bins", analyze_opt.disp_cfg.median_envelope_bins,
                     "Running-median span for --whiten median (odd bins)")
        ->capture_default_str();
    analyze->add_option("--ref-freq", analyze_opt.disp_cfg.ref_hz, "Reference for absolute cent axes (Hz)")
        ->capture_default_str();

    // --- evaluate ---------------------------------------------------------
    std::string eval_ref, eval_est, eval_out;
    EvalConfig eval_cfg;
    auto* evaluate = app.add_subcommand("evaluate", "Score a multi-f0 estimate against a reference");
    evaluate->add_option("--ref", eval_ref, "Reference multi-f0 CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--est", eval_est, "Estimated multi-f0 CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--tolerance-cents", eval_cfg.tolerance_cents, "Match tolerance (cents)")
        ->capture_default_str();
    evaluate->add_option("--out", eval_out, "Write the JSON report here as well as stdout");

    // --- mix --------------------------------------------------------------
    std::string mix_manifest, mix_out;
    bool mix_choir = false;
    auto* mix = app.add_subcommand("mix", "Render all SATB quartets (and optionally the choir mix) "
                                          "from a stem manifest, with companion ground truth");
    mix->add_option("--manifest", mix_manifest, "Stem manifest JSON")->required()->check(CLI::ExistingFile);
    mix->add_option("--out", mix_out, "Output directory")->required();
    mix->add_flag("--choir", mix_choir, "Also render the full choir mix");

    // --- synth ------------------------------------------------------------
    std::string synth_spec_path, synth_out;
    std::uint64_t synth_seed = 1;
    auto* synth = app.add_subcommand("synth", "Generate a controlled unison test signal with exact "
                                              "per-singer f0 ground truth");
    synth->add_option("--spec", synth_spec_path, "Unison spec JSON")->required()->check(CLI::ExistingFile);
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--seed", synth_seed, "Random seed for phases")->capture_default_str();

    // --- report -----------------------------------------------------------
    std::string report_in, report_out;
    bool report_pooled = false;
    auto* report = app.add_subcommand(
        "report", "Aggregate dispersion CSVs (named <piece>__<config>.csv) into summary tables "
                  "and Q-vs-CM significance tests");
    report->add_option("--in", report_in, "Directory of dispersion CSVs")
        ->required()
        ->check(CLI::ExistingDirectory);
    report->add_option("--out", report_out, "Output report JSON (CSV tables written alongside)")
        ->required();
    report->add_flag("--pooled", report_pooled, "Pooled-variance t-test instead of Welch");

    // global flags (--json, --workers) are valid after the subcommand too
    for (CLI::App* sub : {analyze, evaluate, mix, synth, report}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        json result;

        if (*analyze) {
            result = run_analyze(analyze_opt);
            if (!json_output) {
                std::cout << "wrote " << analyze_opt.out_path << "\n";
                for (const auto& sec : result["sections"])
                    std::cout << "  " << sec["section"].get<std::string>() << ": "
                              << sec["estimates"].get<std::size_t>() << " estimates, skips "
                              << sec["skips"].dump() << "\n";
            }
        } else if (*evaluate) {
            const MultiF0Sequence ref = load_multif0(eval_ref);
            const MultiF0Sequence est = load_multif0(eval_est);
            const EvalReport rep = score(ref, est, eval_cfg);
            result = eval_report_to_json(rep, eval_cfg.tolerance_cents);
            if (!eval_out.empty()) {
                std::ofstream out(eval_out);
                if (!out) throw std::runtime_error("cannot open " + eval_out + " for writing");
                out << result.dump(2) << '\n';
            }
            // the evaluate report is JSON on stdout in both modes
            std::cout << result.dump(2) << std::endl;
            return 0;
        } else if (*mix) {
            const StemManifest manifest = StemManifest::load(mix_manifest);
            const LoadedStems stems = LoadedStems::load(manifest);
            fs::create_directories(mix_out);

            std::vector<MixSpec> specs = enumerate_quartets(manifest);
            if (mix_choir) specs.push_back(choir_mix(manifest));

            std::vector<double> peaks(specs.size(), 0.0);
            parallel_for(specs.size(), workers, [&](std::size_t i) {
                const RenderedMix rendered = render_mix(stems, specs[i]);
                const MultiF0Sequence truth = companion_truth(stems, specs[i]);
                const fs::path wav_path = fs::path(mix_out) / (specs[i].name + ".wav");
                const fs::path ref_path = fs::path(mix_out) / (specs[i].name + "_ref.csv");
                write_wav(rendered.clip, wav_path);
                write_multif0(truth, ref_path);
                peaks[i] = rendered.peak;
            });

            result["out"] = mix_out;
            result["mixes"] = specs.size();
            result["piece"] = manifest.piece;
            json mix_list = json::array();
            for (std::size_t i = 0; i < specs.size(); ++i)
                mix_list.push_back({{"name", specs[i].name}, {"peak", peaks[i]}});
            result["rendered"] = mix_list;
            if (!json_output)
                std::cout << "wrote " << specs.size() << " mixes (plus ground truth) to " << mix_out
                          << "\n";
        } else if (*synth) {
            const UnisonSpec spec = parse_unison_spec(synth_spec_path);
            const UnisonRender rendered = synth_unison(spec, synth_seed);
            fs::create_directories(synth_out);

            const fs::path wav_path = fs::path(synth_out) / "unison.wav";
            const std::size_t clipped = write_wav(rendered.clip, wav_path);
            std::vector<std::string> f0_files;
            for (std::size_t i = 0; i < rendered.singer_f0.size(); ++i) {
                const fs::path p = fs::path(synth_out) / ("singer" + std::to_string(i + 1) + "_f0.csv");
                write_f0_track(rendered.singer_f0[i], p);
                f0_files.push_back(p.string());
            }
            const fs::path truth_path = fs::path(synth_out) / "unison_ref.csv";
            write_multif0(rendered.truth, truth_path);

            result["out"] = synth_out;
            result["wav"] = wav_path.string();
            result["singer_f0"] = f0_files;
            result["multif0_ref"] = truth_path.string();
            result["clipped_samples"] = clipped;
            result["seed"] = synth_seed;
            if (!json_output)
                std::cout << "wrote " << wav_path.string() << ", " << f0_files.size()
                          << " singer f0 tracks, " << truth_path.string() << "\n";
        } else if (*report) {
            std::vector<GroupedValues> groups;
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(report_in))
                if (entry.is_regular_file() && entry.path().extension() == ".csv")
                    files.push_back(entry.path());
            std::sort(files.begin(), files.end());
            for (const fs::path& file : files) {
                const std::string stem = file.stem().string();
                const auto sep = stem.find("__");
                if (sep == std::string::npos)
                    throw std::runtime_error("report: cannot derive piece/config from '" +
                                             file.filename().string() +
                                             "', expected <piece>__<config>.csv");
                const std::string piece = stem.substr(0, sep);
                const std::string config = stem.substr(sep + 2);
                for (const DispersionTrack& track : read_dispersion_csv(file)) {
                    GroupedValues g;
                    g.piece = piece;
                    g.section = to_string(track.section);
                    g.config = config;
                    g.source = file.string();
                    g.values.reserve(track.estimates.size());
                    for (const UnisonEstimate& est : track.estimates)
                        g.values.push_back(est.dispersion_cents);
                    if (!g.values.empty()) groups.push_back(std::move(g));
                }
            }
            if (groups.empty()) throw std::runtime_error("report: no dispersion estimates under " + report_in);

            const DispersionReport rep =
                report_tables(groups, report_pooled ? TTestKind::Pooled : TTestKind::Welch);
            const fs::path out_path(report_out);
            write_report_json(rep, out_path);
            fs::path base = out_path;
            base.replace_extension();
            write_report_csv(rep, base.string() + "_summary.csv", base.string() + "_tests.csv");

            result["out"] = report_out;
            result["groups"] = rep.summaries.size();
            result["comparisons"] = rep.comparisons.size();
            if (!json_output)
                std::cout << "wrote " << report_out << " (" << rep.summaries.size() << " groups, "
                          << rep.comparisons.size() << " Q-vs-CM tests)\n";
        }

        if (json_output) std::cout << result.dump(2) << std::endl;
        return 0;
    } catch (const CLI::Error& e) {
        // post-parse usage errors (e.g. a malformed --anchor value)
        if (json_output) std::cout << json{{"error", e.what()}}.dump() << std::endl;
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::string message = e.what();
        for (char& c : message)
            if (c == '\n') c = ' ';
        if (json_output)
            std::cout << json{{"error", message}}.dump() << std::endl;
        std::cerr << "error: " << message << std::endl;
        // missing inputs surface as 2, processing failures as 1
        const bool missing_input =
            message.find("file not found") != std::string::npos ||
            (message.find("cannot open") != std::string::npos &&
             message.find("for writing") == std::string::npos);
        return missing_input ? 2 : 1;
    }
}
