// Command-line front end: magnify, datagen, train, eval, track, physical.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>

#include "axmag/classical.hpp"
#include "axmag/datagen.hpp"
#include "axmag/eval.hpp"
#include "axmag/image_io.hpp"
#include "axmag/msm.hpp"
#include "axmag/parallel.hpp"

using namespace axmag;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitCompute = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = 0;
    int threads = 0;
    bool verbose = false;
};

struct MagnifyArgs {
    fs::path input, output, model, mag_map;
    std::string method, mode = "static", filter, pyramid = "half";
    double alpha = 0.0;
    std::optional<double> alpha_perp, angle;
    double fl = 0.0, fh = 0.0, fps = 0.0;
    int orientations = 4;
};

struct DatagenArgs {
    fs::path out, source_dir;
    std::string mode = "train";
    DatasetConfig cfg;
};

struct TrainArgs {
    fs::path data, out;
    TrainConfig train;
    ModelConfig model;
    bool no_perturb = false;
};

struct EvalArgs {
    fs::path model, data, report, reference, svg;
    std::string method = "msm";
};

struct TrackArgs {
    fs::path input, out, compare;
    int points = 40;
    double alpha = 1.0, angle = 0.0;
    KltConfig klt;
};

struct PhysicalArgs {
    PhysicalSetup setup;
    double alpha = 1.0, duration = 1.0, fps = 1000.0;
    bool omega_in_hz = false;
    fs::path out;
};

std::optional<TemporalFilterSpec> filter_from(const MagnifyArgs& a) {
    if (a.filter.empty()) return std::nullopt;
    TemporalFilterSpec tf;
    if (a.filter == "ideal") tf.kind = TemporalFilterKind::IdealFft;
    else if (a.filter == "butter") tf.kind = TemporalFilterKind::Butterworth;
    else if (a.filter == "diff") tf.kind = TemporalFilterKind::DifferenceOfFrames;
    else throw UsageError("--filter must be ideal, butter or diff");
    if (!(a.fps > 0.0)) throw UsageError("--filter needs --fps");
    tf.low_cut = a.fl;
    tf.high_cut = a.fh;
    tf.fps = a.fps;
    tf.validate();
    return tf;
}

PyramidSpec pyramid_from(const MagnifyArgs& a, int orientations) {
    PyramidSpec p;
    p.orientations = orientations;
    if (a.pyramid == "half") p.octave_fraction = 0.5;
    else if (a.pyramid == "octave") p.octave_fraction = 1.0;
    else throw UsageError("--pyramid must be half or octave");
    return p;
}

int run_magnify(const MagnifyArgs& a, const Globals& g) {
    if (a.method == "axial-phase" && !a.angle) throw UsageError("--method axial-phase requires --angle");
    if (a.method == "msm" && a.model.empty()) throw UsageError("--method msm requires --model");
    if (a.mode != "static" && a.mode != "dynamic") throw UsageError("--mode must be static or dynamic");
    const auto tf = filter_from(a);
    if (a.method == "linear" && !tf) throw UsageError("--method linear requires --filter");

    const auto frames = load_sequence(a.input);
    if (frames.empty()) throw IoError("no frames in " + a.input.string());
    MagnificationSpec m;
    m.angle_deg = a.angle.value_or(0.0);
    m.alpha_par = a.alpha;
    m.alpha_perp = a.alpha_perp.value_or(a.alpha);
    m.mode = a.mode == "static" ? ReferenceMode::Static : ReferenceMode::Dynamic;
    if (!a.mag_map.empty()) m.per_pixel_map = tensor_to_frame(read_axtf(a.mag_map));

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Frame> out;
    if (a.method == "linear") {
        out = linear_evm(frames, a.alpha, *tf);
    } else if (a.method == "phase") {
        out = phase_mag_generic(frames, a.alpha, tf, pyramid_from(a, a.orientations), m.mode);
    } else if (a.method == "axial-phase") {
        out = phase_mag_axial(frames, pyramid_from(a, 2), m, tf);
    } else if (a.method == "msm") {
        const Model<float> model = load_model(a.model);
        out = magnify_video_msm(frames, m, tf, model);
    } else {
        throw UsageError("--method must be linear, phase, axial-phase or msm");
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_sequence(a.output, out);
    std::printf("%zu frames, %.3f s total, %.1f ms/frame\n", out.size(), secs, 1e3 * secs / out.size());
    if (g.verbose) std::printf("written to %s\n", a.output.string().c_str());
    return 0;
}

int run_datagen(DatagenArgs a, const Globals& g) {
    a.cfg.seed = g.seed;
    a.cfg.eval_mode = parse_eval_mode(a.mode);
    if (!a.source_dir.empty()) {
        a.cfg.source = SourceMode::Directory;
        a.cfg.source_dir = a.source_dir;
    }
    a.cfg.validate();
    write_dataset(a.out, a.cfg);
    std::printf("%zu samples written to %s\n", dataset_size(a.cfg), a.out.string().c_str());
    return 0;
}

int run_train(TrainArgs a, const Globals& g) {
    a.train.seed = g.seed;
    a.model.seed = g.seed;
    a.train.perturb = !a.no_perturb;
    const auto r = train_msm(a.data, a.out, a.model, a.train);
    if (!r.log.empty())
        std::printf("%zu steps, first loss %.6f, last loss %.6f\n", r.log.size(), r.log.front().total, r.log.back().total);
    if (g.verbose) std::printf("model written to %s\n", a.out.string().c_str());
    return 0;
}

int run_eval(const EvalArgs& a, const Globals&) {
    std::optional<Model<float>> model;
    Magnifier method;
    if (a.method == "msm") {
        if (a.model.empty()) throw UsageError("--method msm requires --model");
        model = load_model(a.model);
        method = msm_magnifier(*model);
    } else if (a.method == "axial-phase") {
        method = axial_phase_magnifier();
    } else if (a.method == "phase") {
        method = phase_magnifier();
    } else if (a.method == "identity") {
        method = identity_magnifier();
    } else if (a.method == "oracle") {
        method = oracle_magnifier();
    } else {
        throw UsageError("--method must be msm, axial-phase, phase, identity or oracle");
    }
    const auto r = run_curve(a.data, method);
    write_curve_csv(a.report, r.method);
    if (!a.reference.empty()) write_curve_csv(a.reference, r.reference);
    if (!a.svg.empty()) write_curve_svg(a.svg, a.method, {{"input", r.reference}, {a.method, r.method}});
    std::printf("level  x_value     ssim(%s)  ssim(input)\n", a.method.c_str());
    for (std::size_t i = 0; i < r.method.size(); ++i) {
        const auto& ref = r.reference.at(i < r.reference.size() ? i : 0);
        std::printf("%5d  %-10.4g  %.5f    %.5f\n", r.method[i].level, r.method[i].x_value, r.method[i].ssim_mean, ref.ssim_mean);
    }
    if (r.skipped) std::printf("%zu samples skipped\n", r.skipped);
    return 0;
}

int run_track(const TrackArgs& a, const Globals&) {
    const auto frames = load_sequence(a.input);
    if (frames.size() < 2) throw IoError("need at least 2 frames in " + a.input.string());
    const int margin = a.klt.window + 4;
    const auto points = min_eigen_corners(frames[0], a.points, a.klt.window, margin, a.klt.window);
    const auto tracks = klt_track(frames, points, a.klt);
    write_tracks_csv(a.out, tracks);
    std::printf("%zu tracks over %zu frames\n", tracks.size(), frames.size());
    if (!a.compare.empty()) {
        const auto other = load_sequence(a.compare);
        if (other.size() != frames.size()) throw ShapeError("--compare sequence has a different frame count");
        const auto mag = klt_track(other, points, a.klt);
        const auto rep = compare_amplified_trajectories(tracks, mag, a.alpha, a.angle);
        std::printf("axis rms %.4f px (max %.4f), orthogonal rms %.4f px (max %.4f), %zu samples\n", rep.axis_rms, rep.axis_max,
                    rep.orth_rms, rep.orth_max, rep.samples);
    }
    return 0;
}

int run_physical(const PhysicalArgs& a, const Globals&) {
    const auto base = physical_displacement(a.setup, 1.0, a.duration, a.fps, a.omega_in_hz);
    const auto w = physical_displacement(a.setup, a.alpha, a.duration, a.fps, a.omega_in_hz);
    std::printf("omega %.6g, amplitude %.6g m, scale %.6g px/m\n", w.omega, w.amplitude_m, w.px_per_m);
    std::printf("peak %.4f px (alpha=1)\n", base.peak_px);
    if (a.alpha != 1.0) std::printf("peak %.4f px (alpha=%g)\n", w.peak_px, a.alpha);
    if (!a.out.empty()) {
        if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
        std::FILE* f = std::fopen(a.out.string().c_str(), "w");
        if (!f) throw IoError("cannot write " + a.out.string());
        std::fprintf(f, "t,metres,pixels\n");
        for (std::size_t i = 0; i < w.time.size(); ++i) std::fprintf(f, "%.17g,%.17g,%.17g\n", w.time[i], w.metres[i], w.pixels[i]);
        std::fclose(f);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Axial video motion magnification toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
    app.add_flag("--verbose", g.verbose, "More output");

    MagnifyArgs mg;
    auto* magnify = app.add_subcommand("magnify", "Magnify motion in a frame sequence");
    magnify->add_option("--input", mg.input, "Input frame directory")->required();
    magnify->add_option("--output", mg.output, "Output frame directory")->required();
    magnify->add_option("--method", mg.method, "linear, phase, axial-phase or msm")->required();
    magnify->add_option("--alpha", mg.alpha, "Magnification (along the axis for axial methods)")->required();
    magnify->add_option("--alpha-perp", mg.alpha_perp, "Magnification across the axis");
    magnify->add_option("--angle", mg.angle, "Axis angle in degrees");
    magnify->add_option("--mode", mg.mode, "static or dynamic")->capture_default_str();
    magnify->add_option("--filter", mg.filter, "Temporal filter: ideal, butter or diff");
    magnify->add_option("--fl", mg.fl, "Low cutoff in Hz");
    magnify->add_option("--fh", mg.fh, "High cutoff in Hz");
    magnify->add_option("--fps", mg.fps, "Frame rate");
    magnify->add_option("--model", mg.model, "Model manifest for --method msm");
    magnify->add_option("--mag-map", mg.mag_map, "AXTF tensor (H,W,2) of per-pixel factors");
    magnify->add_option("--pyramid", mg.pyramid, "half or octave")->capture_default_str();
    magnify->add_option("--orientations", mg.orientations, "Orientations for --method phase")->capture_default_str();

    DatagenArgs dg;
    auto* datagen = app.add_subcommand("datagen", "Generate a synthetic training or evaluation set");
    datagen->add_option("--out", dg.out, "Output directory")->required();
    datagen->add_option("--count", dg.cfg.count, "Samples (per level for evaluation sets)")->capture_default_str();
    datagen->add_option("--size", dg.cfg.size, "Image size")->capture_default_str();
    datagen->add_option("--mode", dg.mode, "train, subpixel, subpixel-generic or noise")->capture_default_str();
    datagen->add_option("--k-min", dg.cfg.k_min, "Minimum layer count")->capture_default_str();
    datagen->add_option("--k-max", dg.cfg.k_max, "Maximum layer count")->capture_default_str();
    datagen->add_option("--alpha-max", dg.cfg.alpha_max, "Largest magnification factor")->capture_default_str();
    datagen->add_option("--max-translation", dg.cfg.max_translation, "Largest input motion per component")->capture_default_str();
    datagen->add_option("--max-amplified", dg.cfg.max_amplified, "Largest amplified motion per component")->capture_default_str();
    datagen->add_option("--eval-amplified", dg.cfg.eval_amplified, "Amplified motion of evaluation samples in px")->capture_default_str();
    datagen->add_option("--eval-angle", dg.cfg.eval_angle, "Fixed axis for evaluation sets, negative for random")->capture_default_str();
    datagen->add_option("--source-dir", dg.source_dir, "Image directory with backgrounds/, foregrounds/, masks/");

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train the network");
    train->add_option("--data", tr.data, "Dataset directory")->required();
    train->add_option("--out", tr.out, "Output model manifest")->required();
    train->add_option("--epochs", tr.train.epochs, "Epochs")->capture_default_str();
    train->add_option("--batch", tr.train.batch, "Batch size")->capture_default_str();
    train->add_option("--lr", tr.train.lr, "Learning rate")->capture_default_str();
    train->add_option("--max-steps", tr.train.max_steps, "Stop after this many steps, 0 for no limit");
    train->add_option("--channels", tr.model.channels, "Feature channels")->capture_default_str();
    train->add_option("--decoder-channels", tr.model.decoder_channels, "Decoder channels")->capture_default_str();
    train->add_option("--beta", tr.model.beta, "Regularization weight")->capture_default_str();
    train->add_flag("--symmetric-shape-loss", tr.model.symmetric_shape_loss, "Weight both shape terms by beta");
    train->add_flag("--no-perturb", tr.no_perturb, "Disable colour perturbation of the shape target");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "SSIM curve over an evaluation set");
    eval->add_option("--data", ev.data, "Evaluation set directory")->required();
    eval->add_option("--report", ev.report, "Output CSV")->required();
    eval->add_option("--method", ev.method, "msm, axial-phase, phase, identity or oracle")->capture_default_str();
    eval->add_option("--model", ev.model, "Model manifest for --method msm");
    eval->add_option("--reference", ev.reference, "CSV for the input-vs-ground-truth curve");
    eval->add_option("--svg", ev.svg, "SVG plot of both curves");

    TrackArgs tk;
    auto* track = app.add_subcommand("track", "KLT tracking of corners in a frame sequence");
    track->add_option("--input", tk.input, "Frame directory")->required();
    track->add_option("--out", tk.out, "Tracks CSV")->required();
    track->add_option("--points", tk.points, "Number of corners")->capture_default_str();
    track->add_option("--window", tk.klt.window, "Window size")->capture_default_str();
    track->add_option("--levels", tk.klt.levels, "Pyramid levels")->capture_default_str();
    track->add_option("--compare", tk.compare, "Magnified sequence to compare against");
    track->add_option("--alpha", tk.alpha, "Expected magnification along the axis")->capture_default_str();
    track->add_option("--angle", tk.angle, "Axis angle in degrees")->capture_default_str();

    PhysicalArgs ph;
    auto* physical = app.add_subcommand("physical", "Pixel displacement of a vibrating target");
    physical->add_option("--freq", ph.setup.freq_hz, "Vibration frequency in Hz")->capture_default_str();
    physical->add_option("--accel", ph.setup.accel_peak, "Peak acceleration in m/s^2")->capture_default_str();
    physical->add_option("--distance", ph.setup.distance, "Camera distance in m")->capture_default_str();
    physical->add_option("--focal", ph.setup.focal, "Focal length in m")->capture_default_str();
    physical->add_option("--pixel-size", ph.setup.pixel_size, "Pixel pitch in m")->capture_default_str();
    physical->add_option("--alpha", ph.alpha, "Magnification")->capture_default_str();
    physical->add_option("--duration", ph.duration, "Seconds to sample")->capture_default_str();
    physical->add_option("--fps", ph.fps, "Sample rate")->capture_default_str();
    physical->add_flag("--omega-in-hz", ph.omega_in_hz, "Use the frequency value directly as omega");
    physical->add_option("--out", ph.out, "CSV of the sampled wave");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        set_thread_count(g.threads);
        if (*magnify) return run_magnify(mg, g);
        if (*datagen) return run_datagen(dg, g);
        if (*train) return run_train(tr, g);
        if (*eval) return run_eval(ev, g);
        if (*track) return run_track(tk, g);
        if (*physical) return run_physical(ph, g);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCompute;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCompute;
    }
    return kExitUsage;
}
