#include <gtest/gtest.h>
#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "axmag/image_io.hpp"
#include "axmag/imaging.hpp"

namespace axmag {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("axmag_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Frame random_frame(int h, int w, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Frame f(h, w, c);
    for (float& v : f.storage()) v = u(rng);
    return f;
}

// Writes a 16-bit grayscale PNG without going through the library under test.
void write_png16(const fs::path& path, int w, int h, const std::vector<std::uint16_t>& values) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    ASSERT_NE(fp, nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    png_init_io(png, fp);
    png_set_IHDR(png, info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<std::uint8_t> row(2 * w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::uint16_t v = values[y * w + x];
            row[2 * x] = static_cast<std::uint8_t>(v >> 8);
            row[2 * x + 1] = static_cast<std::uint8_t>(v & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

TEST(LoadFrame, EightBitScaling) {
    const auto dir = temp_dir("load8");
    save_png(dir / "white.png", Frame(2, 2, 3, 1.0f));
    const Frame white = load_frame(dir / "white.png");
    EXPECT_EQ(white.channels(), 3);
    for (float v : white.data()) EXPECT_EQ(v, 1.0f);

    save_png(dir / "black.png", Frame(1, 1, 1, 0.0f));
    EXPECT_EQ(load_frame(dir / "black.png").at(0, 0), 0.0f);

    save_png(dir / "mid.png", Frame(1, 1, 1, 128.0f / 255.0f));
    const Frame mid = load_frame(dir / "mid.png");
    EXPECT_EQ(mid.channels(), 1);
    EXPECT_NEAR(mid.at(0, 0), 0.50196, 1e-5);
}

TEST(LoadFrame, SixteenBit) {
    const auto dir = temp_dir("load16");
    write_png16(dir / "g16.png", 2, 1, {0, 65535});
    const Frame f = load_frame(dir / "g16.png");
    EXPECT_EQ(f.at(0, 0), 0.0f);
    EXPECT_EQ(f.at(0, 1), 1.0f);
}

TEST(LoadFrame, Errors) {
    const auto dir = temp_dir("loaderr");
    EXPECT_THROW(load_frame(dir / "missing.png"), IoError);
    {
        std::ofstream out(dir / "corrupt.png", std::ios::binary);
        const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
        out.write(reinterpret_cast<const char*>(sig), 8);
        out << "garbage that is not an IHDR chunk";
    }
    EXPECT_THROW(load_frame(dir / "corrupt.png"), IoError);
    {
        std::ofstream out(dir / "junk.bin", std::ios::binary);
        out << "nope";
    }
    EXPECT_THROW(load_frame(dir / "junk.bin"), IoError);
}

TEST(Axtf, HeaderLayoutAndRoundTrip) {
    Tensor t;
    t.dims = {2, 3};
    t.values = {0.0f, 1.0f, -2.5f, 3.25f, 1e-3f, 7.0f};
    const auto bytes = encode_axtf(t);
    ASSERT_EQ(bytes.size(), 7u + 8u + 24u);
    EXPECT_EQ(bytes[0], 0x41);
    EXPECT_EQ(bytes[1], 0x58);
    EXPECT_EQ(bytes[2], 0x54);
    EXPECT_EQ(bytes[3], 0x46);
    EXPECT_EQ(bytes[4], 0x01);
    EXPECT_EQ(bytes[5], 0x01);
    EXPECT_EQ(bytes[6], 2);
    EXPECT_EQ(bytes[7], 2);  // little-endian dim 0
    EXPECT_EQ(bytes[11], 3);
    // 1.0f = 0x3f800000 little-endian
    EXPECT_EQ(bytes[19], 0x00);
    EXPECT_EQ(bytes[22], 0x3f);
    const Tensor back = decode_axtf(bytes);
    EXPECT_EQ(back.dims, t.dims);
    EXPECT_EQ(back.values, t.values);

    auto bad = bytes;
    bad[5] = 0x02;
    EXPECT_THROW(decode_axtf(bad), IoError);
    bad = bytes;
    bad.pop_back();
    EXPECT_THROW(decode_axtf(bad), IoError);
}

TEST(Axtf, LoadsAsFrame) {
    const auto dir = temp_dir("axtf_frame");
    const Frame f = random_frame(4, 5, 3, 3);
    write_axtf(dir / "f.axtf", frame_to_tensor(f));
    EXPECT_EQ(load_frame(dir / "f.axtf"), f);
}

TEST(Translate, ConstantIsInvariant) {
    const Frame f(32, 32, 3, 0.7f);
    for (auto [dx, dy] : {std::pair{0.3, -1.7}, std::pair{5.0, 2.0}, std::pair{-4.25, 0.5}}) {
        EXPECT_EQ(translate_bilinear(f, dx, dy), f);
        EXPECT_EQ(translate_bilinear(f, dx, dy, Boundary::Reflect), f);
    }
}

TEST(Translate, IntegerShiftMovesImpulse) {
    Frame f(32, 32, 1, 0.0f);
    f.at(10, 10) = 1.0f;
    const Frame g = translate_bilinear(f, 1.0, 0.0);
    EXPECT_EQ(g.at(10, 11), 1.0f);
    EXPECT_EQ(g.at(10, 10), 0.0f);
    double sum = 0.0;
    for (float v : g.data()) sum += v;
    EXPECT_EQ(sum, 1.0);
}

TEST(Translate, HalfPixelOnRamp) {
    const int w = 64;
    Frame f(16, w, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < w; ++x) f.at(y, x) = static_cast<float>(x) / w;
    const Frame g = translate_bilinear(f, 0.5, 0.0);
    for (int y = 0; y < 16; ++y) {
        for (int x = 2; x < w - 2; ++x) EXPECT_NEAR(g.at(y, x), f.at(y, x) - 0.5 / w, 1e-7);
    }
}

TEST(Translate, RejectsNonFinite) {
    const Frame f(8, 8, 1, 0.1f);
    EXPECT_THROW(translate_bilinear(f, std::nan(""), 0.0), std::invalid_argument);
    EXPECT_THROW(translate_bilinear(f, 0.0, INFINITY), std::invalid_argument);
}

TEST(Translate, ForwardBackwardRoundTrip) {
    // Integer shifts: exact everywhere away from the replicated border.
    const Frame f = random_frame(40, 40, 1, 11);
    const Frame back = translate_bilinear(translate_bilinear(f, 3.0, -2.0), -3.0, 2.0);
    for (int y = 4; y < 36; ++y)
        for (int x = 4; x < 36; ++x) EXPECT_EQ(back.at(y, x), f.at(y, x));

    // Fractional shifts: bilinear reproduces affine content exactly.
    Frame affine(40, 40, 1);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) affine.at(y, x) = static_cast<float>(0.1 + 0.01 * x + 0.007 * y);
    const Frame a2 = translate_bilinear(translate_bilinear(affine, 0.37, -1.61), -0.37, 1.61);
    for (int y = 4; y < 36; ++y)
        for (int x = 4; x < 36; ++x) EXPECT_NEAR(a2.at(y, x), affine.at(y, x), 1e-6);
}

TEST(Translate, ReflectBoundary) {
    Frame f(1, 4, 1);
    for (int x = 0; x < 4; ++x) f.at(0, x) = static_cast<float>(x);
    const Frame r = translate_bilinear(f, 2.0, 0.0, Boundary::Reflect);
    EXPECT_EQ(r.at(0, 0), 1.0f);  // samples x=-2 -> 1
    EXPECT_EQ(r.at(0, 1), 0.0f);  // samples x=-1 -> 0
    const Frame c = translate_bilinear(f, 2.0, 0.0, Boundary::Replicate);
    EXPECT_EQ(c.at(0, 0), 0.0f);
}

// Direct window-by-window SSIM used as the oracle.
double ssim_reference(const Frame& a, const Frame& b) {
    const Frame ga = a.to_gray();
    const Frame gb = b.to_gray();
    double w2[11][11];
    double s = 0.0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
            w2[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
            s += w2[i][j];
        }
    for (auto& row : w2)
        for (double& v : row) v /= s;
    const double c1 = 1e-4, c2 = 9e-4;
    double total = 0.0;
    int count = 0;
    for (int y = 0; y + 11 <= ga.height(); ++y) {
        for (int x = 0; x + 11 <= ga.width(); ++x) {
            double mx = 0, my = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    mx += w2[i][j] * ga.at(y + i, x + j);
                    my += w2[i][j] * gb.at(y + i, x + j);
                }
            double vx = 0, vy = 0, cxy = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    const double dx = ga.at(y + i, x + j) - mx;
                    const double dy = gb.at(y + i, x + j) - my;
                    vx += w2[i][j] * dx * dx;
                    vy += w2[i][j] * dy * dy;
                    cxy += w2[i][j] * dx * dy;
                }
            total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return total / count;
}

TEST(Ssim, SelfSimilarityIsOne) {
    const Frame a = random_frame(32, 32, 3, 1);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, ConstantsClosedForm) {
    const double value = ssim(Frame(24, 24, 1, 0.0f), Frame(24, 24, 1, 1.0f));
    // (C1 * C2) / ((1 + C1) * C2)
    EXPECT_NEAR(value, 1e-4 / (1.0 + 1e-4), 1e-12);
    EXPECT_LT(value, 0.01);
}

TEST(Ssim, MatchesScalarLoopOracle) {
    const Frame a = random_frame(64, 64, 1, 21);
    Frame b = random_frame(64, 64, 1, 22);
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = 0.6f * a.data()[i] + 0.4f * b.data()[i];
    EXPECT_NEAR(ssim(a, b), ssim_reference(a, b), 1e-4);
    const Frame c = random_frame(40, 48, 3, 23);
    const Frame d = random_frame(40, 48, 3, 24);
    EXPECT_NEAR(ssim(c, d), ssim_reference(c, d), 1e-4);
}

TEST(Ssim, SymmetricAndShapeChecked) {
    const Frame a = random_frame(30, 30, 1, 5);
    const Frame b = random_frame(30, 30, 1, 6);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    EXPECT_THROW(ssim(a, Frame(30, 31, 1)), ShapeError);
}

TEST(Noise, ZeroFactorIsIdentity) {
    const Frame f = random_frame(16, 16, 3, 2);
    EXPECT_EQ(add_noise(f, {0.0, 99}), f);
}

TEST(Noise, DeterministicUnderSeed) {
    const Frame f = random_frame(16, 16, 3, 2);
    EXPECT_EQ(add_noise(f, {3.0, 7}), add_noise(f, {3.0, 7}));
    EXPECT_NE(add_noise(f, {3.0, 7}), add_noise(f, {3.0, 8}));
}

TEST(Noise, StandardDeviationFollowsModel) {
    const Frame f(64, 64, 1, 0.5f);
    const double sigma = 100.0 * std::sqrt(0.5) / 255.0;
    // Expected std of clamp(0.5 + sigma z) - 0.5 by quadrature over z.
    double m1 = 0.0, m2 = 0.0, mass = 0.0;
    for (double z = -10.0; z <= 10.0; z += 1e-4) {
        const double p = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI) * 1e-4;
        const double v = std::clamp(0.5 + sigma * z, 0.0, 1.0) - 0.5;
        m1 += p * v;
        m2 += p * v * v;
        mass += p;
    }
    const double expected = std::sqrt(m2 / mass - (m1 / mass) * (m1 / mass));

    const Frame g = add_noise(f, {100.0, 1234});
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = g.data()[i] - 0.5;
        s1 += d;
        s2 += d * d;
    }
    const double n = static_cast<double>(g.size());
    const double measured = std::sqrt(s2 / n - (s1 / n) * (s1 / n));
    EXPECT_NEAR(measured, expected, 0.05 * expected);
    EXPECT_NEAR(measured, sigma, 0.10 * sigma);
}

TEST(Quantize, BoundaryAndGrid) {
    const Frame zero = quantize_with_dither(Frame(32, 32, 1, 0.0f), 5);
    for (float v : zero.data()) EXPECT_EQ(v, 0.0f);

    const Frame level = quantize_with_dither(Frame(32, 32, 1, 100.0f / 255.0f), 5);
    for (float v : level.data()) EXPECT_EQ(v, static_cast<float>(100.0 / 255.0));

    const Frame q = quantize_with_dither(random_frame(32, 32, 3, 8), 6);
    for (float v : q.data()) {
        const double k = v * 255.0;
        EXPECT_NEAR(k, std::round(k), 1e-4);
        EXPECT_EQ(v, static_cast<float>(std::round(k) / 255.0));
    }
}

TEST(Quantize, DitherSplitsHalfLevel) {
    // 0.5 * 255 = 127.5 sits exactly between levels 127 and 128; symmetric
    // dither of +-0.5 level sends half of the pixels each way.
    const Frame q = quantize_with_dither(Frame(1000, 1000, 1, 0.5f), 17);
    std::size_t up = 0;
    for (float v : q.data()) {
        ASSERT_TRUE(v == static_cast<float>(127.0 / 255.0) || v == static_cast<float>(128.0 / 255.0));
        if (v > 0.5f) ++up;
    }
    EXPECT_NEAR(static_cast<double>(up) / 1e6, 0.5, 0.01);
}

TEST(Quantize, Deterministic) {
    const Frame f = random_frame(16, 16, 3, 9);
    EXPECT_EQ(quantize_with_dither(f, 3), quantize_with_dither(f, 3));
}

}  // namespace
}  // namespace axmag
