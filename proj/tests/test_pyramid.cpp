#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "axmag/imaging.hpp"
#include "axmag/steerable_pyramid.hpp"
#include "test_images.hpp"

namespace axmag {
namespace {

constexpr double kPi = std::numbers::pi;

double band_energy(const PyramidBand& b) {
    double e = 0.0;
    for (const auto& c : b.coeffs) e += std::norm(c);
    return e;
}

TEST(FilterBank, TightFrameAcrossLayouts) {
    struct Case {
        int rows, cols, k;
        double b, offset;
    };
    for (const Case& c : {Case{64, 64, 4, 1.0, 0.0}, Case{64, 64, 2, 0.5, 0.0}, Case{48, 80, 2, 0.5, 30.0},
                          Case{45, 51, 3, 1.0, 0.0}, Case{256, 256, 8, 0.5, 12.5}}) {
        PyramidSpec spec;
        spec.orientations = c.k;
        spec.octave_fraction = c.b;
        spec.orientation_offset_deg = c.offset;
        SteerableFilterBank bank(c.rows, c.cols, spec);
        EXPECT_LE(bank.tight_frame_deviation(), 1e-6) << c.rows << "x" << c.cols << " K=" << c.k;
    }
}

TEST(FilterBank, BandSizesShrinkWithScale) {
    PyramidSpec spec;
    spec.orientations = 2;
    spec.octave_fraction = 0.5;
    const Frame f = test_images::pink_noise(64, 64, 1);
    const auto pyr = build_csp(f, spec);
    EXPECT_EQ(pyr.spec.depth, max_pyramid_depth(64, 64, 0.5));
    int prev = 1 << 30;
    for (int s = 0; s < pyr.depth(); ++s) {
        const auto& b = pyr.band(s, 0);
        EXPECT_LE(b.rows, prev);
        prev = b.rows;
    }
    EXPECT_GE(pyr.lowpass_rows, 8);
    EXPECT_GE(pyr.lowpass_cols, 8);
    EXPECT_LT(pyr.band(pyr.depth() - 1, 0).rows, 64);
}

TEST(Pyramid, ConstantGoesToLowpass) {
    const Frame f(64, 64, 1, 0.5f);
    const auto pyr = build_csp(f, PyramidSpec{});
    for (const auto& b : pyr.bands) EXPECT_LT(band_energy(b), 1e-20);
    double mean = 0.0;
    for (double v : pyr.lowpass) mean += v;
    mean /= static_cast<double>(pyr.lowpass.size());
    // Unitary normalisation: lowpass samples carry the mean scaled by sqrt(N/M).
    const double scale = std::sqrt(64.0 * 64.0 / static_cast<double>(pyr.lowpass.size()));
    EXPECT_NEAR(mean, 0.5 * scale, 1e-9);
    const Frame back = collapse_csp(pyr);
    EXPECT_LE(max_abs_diff(back, f), 1e-6);
}

TEST(Pyramid, HorizontalSinusoidSelectsXBand) {
    Frame f(64, 64, 1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) f.at(y, x) = static_cast<float>(0.5 + 0.4 * std::cos(2 * kPi * x / 8.0));
    PyramidSpec spec;
    spec.orientations = 2;
    const auto pyr = build_csp(f, spec);
    double along = 0.0, across = 0.0;
    for (const auto& b : pyr.bands) (b.orientation == 0 ? along : across) += band_energy(b);
    ASSERT_GT(along, 0.0);
    EXPECT_LE(across, 0.01 * (along + across));
}

TEST(Pyramid, ParsevalOnWhiteNoise) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    Frame f(64, 64, 1);
    double input = 0.0;
    for (float& v : f.storage()) {
        v = static_cast<float>(n(rng));
        input += static_cast<double>(v) * v;
    }
    for (double b : {1.0, 0.5}) {
        PyramidSpec spec;
        spec.octave_fraction = b;
        const auto pyr = build_csp(f, spec);
        double total = 0.0;
        for (const auto& band : pyr.bands) total += band_energy(band);
        for (double v : pyr.highpass) total += v * v;
        for (double v : pyr.lowpass) total += v * v;
        EXPECT_NEAR(total / input, 1.0, 1e-4);
    }
}

TEST(Pyramid, CollapseReconstructsNaturalImages) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Frame f = test_images::natural(256, 256, seed);
        for (double b : {1.0, 0.5}) {
            PyramidSpec spec;
            spec.orientations = b == 1.0 ? 4 : 2;
            spec.octave_fraction = b;
            const Frame back = collapse_csp(build_csp(f, spec));
            EXPECT_GE(psnr(back, f), 40.0);
            EXPECT_LE(max_abs_diff(back, f), 1e-5);
        }
    }
}

TEST(Pyramid, ZeroingBandsRemovesBandpassSinusoid) {
    Frame f(64, 64, 1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            f.at(y, x) = static_cast<float>(std::cos(2 * kPi * (x / 8.0 + y / 16.0)));
    auto pyr = build_csp(f, PyramidSpec{});
    for (auto& b : pyr.bands)
        for (auto& c : b.coeffs) c = 0.0;
    const Frame out = collapse_csp(pyr);
    double in_e = 0.0, out_e = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        in_e += f.data()[i] * f.data()[i];
        out_e += out.data()[i] * out.data()[i];
    }
    EXPECT_LE(out_e, 0.02 * in_e);
}

TEST(Pyramid, CollapseRejectsInconsistentBands) {
    auto pyr = build_csp(test_images::pink_noise(32, 32, 2), PyramidSpec{});
    pyr.bands[1].coeffs.pop_back();
    EXPECT_THROW(collapse_csp(pyr), ShapeError);
}

TEST(Pyramid, TooSmallForDepth) {
    PyramidSpec spec;
    spec.depth = 5;
    EXPECT_THROW(build_csp(Frame(32, 32, 1, 0.1f), spec), ShapeError);
    spec.depth = 0;
    spec.orientations = 1;
    EXPECT_THROW(build_csp(Frame(32, 32, 1, 0.1f), spec), std::invalid_argument);
}

TEST(BandPhase, ElementaryValues) {
    auto pyr = build_csp(Frame(32, 32, 1, 0.2f), PyramidSpec{});
    auto& band = pyr.band(0, 0);
    band.coeffs[0] = cplx(1.0, 0.0);
    band.coeffs[1] = cplx(0.0, 1.0);
    band.coeffs[2] = cplx(-1.0, -0.0);
    const auto phase = band_phase(pyr, 0, 0);
    EXPECT_EQ(phase[0], 0.0);
    EXPECT_NEAR(phase[1], kPi / 2, 1e-15);
    EXPECT_NEAR(phase[2], kPi, 1e-15);
    for (double p : phase) {
        EXPECT_GT(p, -kPi);
        EXPECT_LE(p, kPi);
    }
    EXPECT_THROW(band_phase(pyr, 9, 0), std::out_of_range);
}

TEST(BandPhase, ShiftTheorem) {
    const double lambda = 16.0, delta = 0.3;
    auto grating = [&](double shift) {
        Frame f(64, 64, 1);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                f.at(y, x) = static_cast<float>(0.5 + 0.3 * std::cos(2 * kPi * (x - shift) / lambda));
        return f;
    };
    PyramidSpec spec;
    spec.orientations = 2;
    const auto p0 = build_csp(grating(0.0), spec);
    const auto p1 = build_csp(grating(delta), spec);
    // dominant band: orientation 0, scale with most energy
    int best = 0;
    double best_e = 0.0;
    for (int s = 0; s < p0.depth(); ++s) {
        const double e = band_energy(p0.band(s, 0));
        if (e > best_e) {
            best_e = e;
            best = s;
        }
    }
    const auto a = band_phase(p0, best, 0);
    const auto b = band_phase(p1, best, 0);
    const double expected = -2 * kPi * delta / lambda;  // content moves to +x
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::remainder(b[i] - a[i], 2 * kPi);
        EXPECT_NEAR(d, expected, 1e-3);
    }
}

TEST(Pyramid, IntegerShiftEquivariance) {
    const Frame f = test_images::pink_noise(64, 64, 7);
    Frame g(64, 64, 1);
    const int sx = 4, sy = 8;  // multiples of 4 keep scale-2 octave bands on-grid
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) g.at((y + sy) % 64, (x + sx) % 64) = f.at(y, x);
    const auto pf = build_csp(f, PyramidSpec{});
    const auto pg = build_csp(g, PyramidSpec{});
    for (int s = 0; s < 3; ++s) {
        for (int o = 0; o < 4; ++o) {
            const auto& bf = pf.band(s, o);
            const auto& bg = pg.band(s, o);
            const int step = 64 / bf.rows;
            for (int y = 4; y < bf.rows - 4; ++y)
                for (int x = 4; x < bf.cols - 4; ++x) {
                    const int yy = (y + sy / step) % bf.rows;
                    const int xx = (x + sx / step) % bf.cols;
                    EXPECT_NEAR(std::abs(bg.coeffs[yy * bg.cols + xx]), std::abs(bf.coeffs[y * bf.cols + x]), 1e-4);
                }
        }
    }
}

TEST(Pyramid, NegationShiftsPhaseByPi) {
    const Frame f = test_images::pink_noise(32, 32, 3);
    Frame g = f;
    for (float& v : g.storage()) v = -v;
    const auto pf = build_csp(f, PyramidSpec{});
    const auto pg = build_csp(g, PyramidSpec{});
    for (std::size_t b = 0; b < pf.bands.size(); ++b) {
        for (std::size_t i = 0; i < pf.bands[b].coeffs.size(); ++i) {
            const cplx c = pf.bands[b].coeffs[i];
            if (std::abs(c) <= 1e-8) continue;
            const double d = std::remainder(std::arg(pg.bands[b].coeffs[i]) - std::arg(c), 2 * kPi);
            EXPECT_NEAR(std::abs(d), kPi, 1e-6);
        }
    }
}

TEST(Pyramid, SerialisesToAxtf) {
    const Frame f = test_images::pink_noise(32, 32, 9);
    PyramidSpec spec;
    spec.orientations = 2;
    spec.octave_fraction = 0.5;
    const auto pyr = build_csp(f, spec);
    const auto dir = std::filesystem::temp_directory_path() / "axmag_pyr_io";
    std::filesystem::remove_all(dir);
    save_pyramid(dir, pyr);
    const auto back = load_pyramid(dir);
    ASSERT_EQ(back.bands.size(), pyr.bands.size());
    EXPECT_EQ(back.spec.depth, pyr.spec.depth);
    EXPECT_EQ(back.spec.octave_fraction, 0.5);
    EXPECT_LE(max_abs_diff(collapse_csp(back), f), 1e-5);
}

}  // namespace
}  // namespace axmag
