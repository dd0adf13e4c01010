#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "axmag/eval.hpp"
#include "axmag/fft.hpp"
#include "axmag/imaging.hpp"
#include "test_images.hpp"

using namespace axmag;
namespace fs = std::filesystem;

namespace {

std::vector<TrainSample> eval_set(std::size_t per_level) {
    DatasetConfig c;
    c.size = 64;
    c.k_min = 2;
    c.k_max = 3;
    c.count = per_level;
    c.seed = 5;
    c.eval_mode = EvalMode::Subpixel;
    std::vector<TrainSample> out;
    for (std::size_t i = 0; i < dataset_size(c); ++i) out.push_back(generate_sample(c, i));
    return out;
}

Frame texture(int n, std::uint64_t seed) { return gaussian_blur(test_images::pink_noise(n, n, seed), 1.0); }

std::vector<Vec2> grid_points(int n, int margin, int step) {
    std::vector<Vec2> p;
    for (int y = margin; y <= n - 1 - margin; y += step)
        for (int x = margin; x <= n - 1 - margin; x += step) p.push_back({double(x), double(y)});
    return p;
}

Vec2 mean_displacement(const std::vector<Track>& tracks, std::size_t frame) {
    Vec2 s{0, 0};
    int n = 0;
    for (const auto& t : tracks) {
        if (!t.points[frame].valid) continue;
        s[0] += t.points[frame].x - t.points[0].x;
        s[1] += t.points[frame].y - t.points[0].y;
        ++n;
    }
    EXPECT_GT(n, 0);
    return {s[0] / n, s[1] / n};
}

}  // namespace

TEST(Curves, IdentityMatchesReferenceAndOracleIsOne) {
    const auto samples = eval_set(2);
    const auto id = run_curve(samples, identity_magnifier());
    ASSERT_EQ(id.method.size(), 15u);
    for (std::size_t i = 0; i < id.method.size(); ++i) {
        EXPECT_EQ(id.method[i].ssim_mean, id.reference[i].ssim_mean);
        EXPECT_EQ(id.method[i].ssim_std, id.reference[i].ssim_std);
        EXPECT_EQ(id.method[i].level, static_cast<int>(i) + 1);
        EXPECT_EQ(id.method[i].n, 2u);
    }
    EXPECT_NEAR(id.method.front().x_value, 0.04, 1e-12);
    EXPECT_NEAR(id.method.back().x_value, 1.0, 1e-12);
    const auto oracle = run_curve(samples, oracle_magnifier());
    for (const auto& p : oracle.method) {
        EXPECT_DOUBLE_EQ(p.ssim_mean, 1.0);
        EXPECT_NEAR(p.ssim_std, 0.0, 1e-12);
    }
}

TEST(Curves, IndependentOfSampleOrder) {
    auto samples = eval_set(3);
    const auto a = run_curve(samples, identity_magnifier());
    std::mt19937_64 rng(1);
    std::shuffle(samples.begin(), samples.end(), rng);
    const auto b = run_curve(samples, identity_magnifier());
    ASSERT_EQ(a.method.size(), b.method.size());
    for (std::size_t i = 0; i < a.method.size(); ++i) {
        EXPECT_NEAR(a.method[i].ssim_mean, b.method[i].ssim_mean, 1e-12);
        EXPECT_NEAR(a.method[i].ssim_std, b.method[i].ssim_std, 1e-12);
    }
}

TEST(Curves, FailingSamplesAreSkipped) {
    const auto samples = eval_set(2);
    int calls = 0;
    const auto r = run_curve(samples, [&](const TrainSample& s) {
        if (s.level == 3 && calls++ == 0) throw std::runtime_error("boom");
        return s.frame_b;
    });
    EXPECT_EQ(r.skipped, 1u);
    EXPECT_EQ(r.method[2].n, 1u);
    EXPECT_EQ(r.reference[2].n, 2u);
}

TEST(Curves, DatasetDirectoryMatchesInMemory) {
    const fs::path dir = fs::temp_directory_path() / "axmag_eval_curve";
    fs::remove_all(dir);
    DatasetConfig c;
    c.size = 32;
    c.k_min = 2;
    c.k_max = 2;
    c.count = 1;
    c.seed = 2;
    c.eval_mode = EvalMode::Noise;
    write_dataset(dir, c);
    std::vector<TrainSample> mem;
    for (std::size_t i = 0; i < dataset_size(c); ++i) mem.push_back(generate_sample(c, i));
    const auto a = run_curve(dir, identity_magnifier());
    const auto b = run_curve(mem, identity_magnifier());
    ASSERT_EQ(a.method.size(), 21u);
    for (std::size_t i = 0; i < a.method.size(); ++i) {
        EXPECT_EQ(a.method[i].ssim_mean, b.method[i].ssim_mean);
        EXPECT_EQ(a.method[i].x_value, b.method[i].x_value);
    }
    EXPECT_NEAR(a.method.front().x_value, 0.01, 1e-12);
    EXPECT_NEAR(a.method.back().x_value, 100.0, 1e-9);

    write_curve_csv(dir / "curve.csv", a.method);
    std::ifstream in(dir / "curve.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "level,x_value,ssim_mean,ssim_std,n");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 21);
    write_curve_svg(dir / "curve.svg", "noise", {{"input", a.reference}, {"identity", a.method}});
    EXPECT_GT(fs::file_size(dir / "curve.svg"), 200u);
    fs::remove_all(dir);
}

TEST(Curves, SampleSpecUsesNetworkConvention) {
    const auto s = eval_set(1)[4];
    const auto m = spec_for_sample(s);
    ASSERT_TRUE(m.per_pixel_map.has_value());
    EXPECT_EQ(m.angle_deg, s.motion.angle_deg);
    EXPECT_FLOAT_EQ(m.per_pixel_map->at(10, 10, 0), s.mag_map.at(10, 10, 0) - 1.0f);
}

TEST(Klt, StaticVideoHasNoMotion) {
    const Frame f = texture(96, 1);
    const auto tracks = klt_track({f, f, f}, grid_points(96, 16, 16));
    for (const auto& t : tracks)
        for (const auto& p : t.points) {
            ASSERT_TRUE(p.valid);
            EXPECT_NEAR(p.x - t.points[0].x, 0.0, 1e-3);
            EXPECT_NEAR(p.y - t.points[0].y, 0.0, 1e-3);
        }
}

TEST(Klt, RecoversHalfPixelShift) {
    const Frame f = texture(96, 2);
    const auto tracks = klt_track({f, translate_bilinear(f, 0.5, 0.0)}, grid_points(96, 20, 14));
    for (const auto& t : tracks) {
        ASSERT_TRUE(t.points[1].valid);
        EXPECT_NEAR(t.points[1].x - t.points[0].x, 0.5, 0.05);
        EXPECT_NEAR(t.points[1].y - t.points[0].y, 0.0, 0.05);
    }
}

TEST(Klt, FollowsLinearDrift) {
    const Frame f = texture(128, 3);
    std::vector<Frame> frames;
    for (int t = 0; t < 10; ++t) frames.push_back(translate_bilinear(f, 1.0 * t, 0.0));
    const auto tracks = klt_track(frames, grid_points(128, 30, 17));
    const Vec2 d = mean_displacement(tracks, 9);
    EXPECT_NEAR(d[0], 9.0, 0.2);
    EXPECT_NEAR(d[1], 0.0, 0.2);
}

TEST(Klt, ForwardAndBackwardDisplacementsCancel) {
    const Frame f = texture(96, 4);
    const Frame g = translate_bilinear(f, 1.3, -0.7);
    const auto pts = grid_points(96, 24, 16);
    const auto fwd = klt_track({f, g}, pts);
    std::vector<Vec2> moved;
    for (const auto& t : fwd) moved.push_back({t.points[1].x, t.points[1].y});
    const auto back = klt_track({g, f}, moved);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        ASSERT_TRUE(back[k].points[1].valid);
        const double fx = fwd[k].points[1].x - fwd[k].points[0].x, fy = fwd[k].points[1].y - fwd[k].points[0].y;
        const double bx = back[k].points[1].x - back[k].points[0].x, by = back[k].points[1].y - back[k].points[0].y;
        EXPECT_NEAR(fx, -bx, 0.02);
        EXPECT_NEAR(fy, -by, 0.02);
    }
}

TEST(Klt, FlatRegionIsLost) {
    Frame flat(64, 64, 1, 0.5f);
    const auto tracks = klt_track({flat, flat}, {{32.0, 32.0}});
    EXPECT_TRUE(tracks[0].points[0].valid);
    EXPECT_FALSE(tracks[0].points[1].valid);
    EXPECT_THROW(klt_track({flat}, {{32.0, 32.0}}), std::invalid_argument);
    EXPECT_THROW(klt_track({flat, flat}, {{2.0, 32.0}}), std::invalid_argument);
}

TEST(Klt, CornersAreSeparatedAndInside) {
    const Frame f = texture(96, 5);
    const auto c = min_eigen_corners(f, 20, 8.0, 12);
    EXPECT_EQ(c.size(), 20u);
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_GE(c[i][0], 12);
        EXPECT_LE(c[i][0], 96 - 13);
        for (std::size_t j = 0; j < i; ++j) EXPECT_GE(std::hypot(c[i][0] - c[j][0], c[i][1] - c[j][1]), 8.0);
    }
}

TEST(Trajectories, AnalyticScalingGivesZeroError) {
    std::vector<Track> orig(3), mag(3);
    for (int k = 0; k < 3; ++k) {
        for (int t = 0; t < 5; ++t) {
            const double dx = 0.1 * t * (k + 1), dy = -0.05 * t;
            orig[k].points.push_back({10 + dx, 20 + dy, true});
            // alpha along x (axis 0), unchanged along y
            mag[k].points.push_back({10 + 7.0 * dx, 20 + dy, true});
        }
    }
    const auto r = compare_amplified_trajectories(orig, mag, 7.0, 0.0);
    EXPECT_NEAR(r.axis_rms, 0.0, 1e-12);
    EXPECT_NEAR(r.orth_rms, 0.0, 1e-12);
    EXPECT_EQ(r.samples, 15u);
    mag.pop_back();
    EXPECT_THROW(compare_amplified_trajectories(orig, mag, 7.0, 0.0), std::invalid_argument);
}

TEST(Trajectories, DatagenOracleMotionIsRecovered) {
    // Band-limited texture: bilinear sampling inside the tracker is then
    // nearly unbiased, which matters once errors are scaled by alpha.
    const Frame f = gaussian_blur(test_images::pink_noise(160, 160, 6), 2.0);
    const Vec2 step{0.1, 0.2};
    const Vec2 alpha{20.0, 1.0};
    std::vector<Frame> orig, mag;
    for (int t = 0; t < 6; ++t) {
        const Vec2 d{step[0] * t, step[1] * t};
        const Vec2 m = magnified_translation(d, alpha, 0.0);
        orig.push_back(test_images::spectral_shift(f, d[0], d[1]));
        mag.push_back(test_images::spectral_shift(f, m[0], m[1]));
    }
    const auto pts = grid_points(160, 50, 15);
    const auto r = compare_amplified_trajectories(klt_track(orig, pts), klt_track(mag, pts), 20.0, 0.0);
    EXPECT_EQ(r.samples, pts.size() * 6);
    EXPECT_LT(r.axis_rms, 0.1);
    EXPECT_LT(r.orth_rms, 0.05);
}

TEST(Trajectories, TracksCsv) {
    const fs::path p = fs::temp_directory_path() / "axmag_tracks.csv";
    std::vector<Track> t(1);
    t[0].id = 4;
    t[0].points = {{1.5, 2.0, true}, {0, 0, false}};
    write_tracks_csv(p, t);
    std::ifstream in(p);
    std::string a, b, c;
    std::getline(in, a);
    std::getline(in, b);
    std::getline(in, c);
    EXPECT_EQ(a, "track_id,frame,x,y,status");
    EXPECT_EQ(b, "4,0,1.5,2,ok");
    EXPECT_EQ(c, "4,1,0,0,lost");
    fs::remove(p);
}

TEST(Physical, TableValuesGiveExpectedPeak) {
    const PhysicalSetup s;
    const auto w = physical_displacement(s, 1.0, 1.0, 1600.0);
    const double omega = 2 * std::numbers::pi * 20.0;
    const double expected = 4.11 / (omega * omega) * 0.1 / (2.0 * 5.86e-6);
    EXPECT_NEAR(expected, 2.2207, 1e-4);
    EXPECT_NEAR(w.peak_px, expected, 1e-12);
    EXPECT_NEAR(*std::max_element(w.pixels.begin(), w.pixels.end()), expected, 1e-9);
    EXPECT_NEAR(w.amplitude_m, 2.6027e-4, 1e-7);
    EXPECT_NEAR(w.px_per_m, 8532.42, 0.01);

    const auto w10 = physical_displacement(s, 10.0, 1.0, 1000.0);
    EXPECT_EQ(w10.peak_px, 10.0 * w.peak_px);
    PhysicalSetup s4 = s;
    s4.accel_peak *= 4;
    EXPECT_NEAR(physical_displacement(s4, 1.0, 1.0, 1000.0).peak_px, 4.0 * w.peak_px, 1e-12);
    EXPECT_NEAR(physical_displacement(s, 1.0, 1.0, 1000.0, true).omega, 20.0, 0.0);
    PhysicalSetup bad = s;
    bad.distance = 0;
    EXPECT_THROW(physical_displacement(bad, 1.0, 1.0, 100.0), std::invalid_argument);
}

// Spectral second derivative of the metric wave over whole periods.
TEST(Physical, SecondDerivativeRecoversAcceleration) {
    const PhysicalSetup s;
    const double fps = 1600.0;
    const auto w = physical_displacement(s, 1.0, 1.0, fps);
    const int n = static_cast<int>(w.metres.size());
    std::vector<cplx> f(w.metres.begin(), w.metres.end());
    fft1d(f, false);
    for (int k = 0; k < n; ++k) {
        const int kk = k <= n / 2 ? k : k - n;
        const double om = 2 * std::numbers::pi * kk * fps / n;
        f[k] *= -om * om / n;
    }
    fft1d(f, true);
    double peak = 0.0, worst = 0.0;
    for (int i = 0; i < n; ++i) {
        peak = std::max(peak, -f[i].real());
        worst = std::max(worst, std::abs(f[i].real() + w.omega * w.omega * w.metres[i]));
    }
    EXPECT_LE(worst / s.accel_peak, 1e-6);
    EXPECT_NEAR(peak, 4.11, 4.11e-3);
}
