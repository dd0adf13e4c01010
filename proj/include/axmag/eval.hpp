#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "axmag/datagen.hpp"
#include "axmag/frame.hpp"
#include "axmag/msm.hpp"
#include "axmag/steerable_pyramid.hpp"

namespace axmag {

// ---- SSIM curves ----

struct CurvePoint {
    int level = 0;
    double x_value = 0.0;  // motion in px, or noise factor
    double ssim_mean = 0.0;
    double ssim_std = 0.0;  // sample standard deviation, 0 for one sample
    std::size_t n = 0;
};

struct CurveResult {
    std::vector<CurvePoint> method;
    /// SSIM between the unprocessed second frame and the ground truth.
    std::vector<CurvePoint> reference;
    std::size_t skipped = 0;
};

/// Produces the magnified estimate of sample.amplified from the pair.
using Magnifier = std::function<Frame(const TrainSample&)>;

/// SSIM(method output, ground truth) per evaluation level. A sample whose
/// method throws is skipped with a warning on stderr and counted.
CurveResult run_curve(const std::vector<TrainSample>& samples, const Magnifier& method);
/// Same, reading samples from a dataset directory as needed.
CurveResult run_curve(const std::filesystem::path& dataset, const Magnifier& method);

/// Axis-aligned magnification request for a sample, in the (1 + alpha)
/// convention, carrying the sample's factor map.
MagnificationSpec spec_for_sample(const TrainSample& sample);

Magnifier identity_magnifier();
Magnifier oracle_magnifier();
Magnifier msm_magnifier(const Model<float>& model);
/// Two-orientation phase-based magnification on a half-octave pyramid.
Magnifier axial_phase_magnifier();
/// Single-factor phase-based magnification (four orientations, half-octave),
/// using the mean axial factor of the map.
Magnifier phase_magnifier();

/// CSV: level,x_value,ssim_mean,ssim_std,n
void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve);

struct CurveSeries {
    std::string label;
    std::vector<CurvePoint> points;
};
/// Polyline plot of SSIM against x_value on a log axis.
void write_curve_svg(const std::filesystem::path& path, const std::string& title, const std::vector<CurveSeries>& series);

// ---- tracking ----

struct KltConfig {
    int window = 15;
    int levels = 3;
    int iterations = 30;
    double epsilon = 1e-3;
    /// Minimum eigenvalue of the window's structure tensor, per pixel.
    double min_eigen = 1e-6;
};

struct TrackPoint {
    double x = 0.0;
    double y = 0.0;
    bool valid = false;
};

struct Track {
    int id = 0;
    std::vector<TrackPoint> points;  // one per frame
};

/// Corners by the minimum eigenvalue of the structure tensor, strongest
/// first, separated by at least min_distance and at least margin from the
/// border.
std::vector<Vec2> min_eigen_corners(const Frame& frame, int max_count, double min_distance, int margin,
                                    int window = 15);

/// Pyramidal Lucas-Kanade with a translation model. Each frame is matched
/// against the first-frame template, starting from the previous estimate.
/// A point that leaves the frame or whose system becomes ill-conditioned is
/// invalid from that frame on.
std::vector<Track> klt_track(const std::vector<Frame>& frames, const std::vector<Vec2>& points,
                             const KltConfig& config = {});

struct TrajectoryReport {
    double axis_rms = 0.0;   // RMS(mag - alpha * orig) along the axis
    double orth_rms = 0.0;   // RMS(mag - orig) across the axis
    double axis_max = 0.0;
    double orth_max = 0.0;
    std::size_t samples = 0;  // (track, frame) pairs valid in both
};

/// Compares displacements relative to frame 0, projected on the axis and
/// its orthogonal. Throws std::invalid_argument on track or frame count
/// mismatch.
TrajectoryReport compare_amplified_trajectories(const std::vector<Track>& orig, const std::vector<Track>& mag, double alpha,
                                                double axis_deg);

/// CSV: track_id,frame,x,y,status
void write_tracks_csv(const std::filesystem::path& path, const std::vector<Track>& tracks);

// ---- physical displacement ----

struct PhysicalSetup {
    double freq_hz = 20.0;
    double accel_peak = 4.11;   // m/s^2
    double distance = 2.0;      // m
    double focal = 0.1;         // m
    double pixel_size = 5.86e-6;  // m
    void validate() const;
};

struct PhysicalWave {
    double omega = 0.0;       // rad/s, or the frequency itself with omega_in_hz
    double amplitude_m = 0.0;  // a / omega^2
    double px_per_m = 0.0;     // f / (L v)
    double peak_px = 0.0;      // alpha * amplitude_m * px_per_m
    std::vector<double> time;
    std::vector<double> metres;  // s(t), unscaled by alpha
    std::vector<double> pixels;  // alpha * k(t)
};

/// Sinusoidal vibration sampled at fps for duration_s. By default
/// omega = 2 pi freq; omega_in_hz uses the frequency value as omega.
PhysicalWave physical_displacement(const PhysicalSetup& setup, double alpha, double duration_s, double fps,
                                   bool omega_in_hz = false);

}  // namespace axmag
