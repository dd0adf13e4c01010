#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "axmag/eval.hpp"
#include "axmag/imaging.hpp"
#include "axmag/parallel.hpp"

namespace axmag {
namespace fs = std::filesystem;

namespace {

Frame downsample2(const Frame& f) {
    const Frame b = gaussian_blur(f, 1.0);
    Frame out((f.height() + 1) / 2, (f.width() + 1) / 2, 1);
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) out.at(y, x) = b.at(2 * y, 2 * x);
    return out;
}

std::vector<Frame> gray_pyramid(const Frame& f, int levels) {
    std::vector<Frame> p{f.to_gray()};
    for (int l = 1; l < levels; ++l) p.push_back(downsample2(p.back()));
    return p;
}

// Central differences, one-sided at the border.
std::pair<Frame, Frame> gradients(const Frame& g) {
    const int h = g.height(), w = g.width();
    Frame gx(h, w, 1), gy(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(x - 1, 0), x1 = std::min(x + 1, w - 1);
            const int y0 = std::max(y - 1, 0), y1 = std::min(y + 1, h - 1);
            gx.at(y, x) = x1 > x0 ? (g.at(y, x1) - g.at(y, x0)) / static_cast<float>(x1 - x0) : 0.0f;
            gy.at(y, x) = y1 > y0 ? (g.at(y1, x) - g.at(y0, x)) / static_cast<float>(y1 - y0) : 0.0f;
        }
    return {gx, gy};
}

// Keys cubic convolution (a = -0.5), clamped borders. Bilinear sampling
// biases subpixel estimates by a few hundredths of a pixel on textured input.
double keys(double t) {
    t = std::abs(t);
    if (t < 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

double sample_cubic(const Frame& f, double x, double y) {
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    double wx[4], wy[4];
    for (int i = 0; i < 4; ++i) {
        wx[i] = keys(fx - (i - 1));
        wy[i] = keys(fy - (i - 1));
    }
    double v = 0.0;
    for (int j = 0; j < 4; ++j) {
        const int yy = std::clamp(y0 + j - 1, 0, f.height() - 1);
        double row = 0.0;
        for (int i = 0; i < 4; ++i) row += wx[i] * f.at(yy, std::clamp(x0 + i - 1, 0, f.width() - 1));
        v += wy[j] * row;
    }
    return v;
}

struct LevelData {
    Frame image, gx, gy;
};

std::vector<LevelData> level_data(const Frame& f, int levels, bool with_gradients) {
    std::vector<LevelData> out;
    for (auto& img : gray_pyramid(f, levels)) {
        LevelData d;
        if (with_gradients) std::tie(d.gx, d.gy) = gradients(img);
        d.image = std::move(img);
        out.push_back(std::move(d));
    }
    return out;
}

// Refines displacement d (full resolution) of the template around p0 in
// `ref` against `cur`. Returns false when the system is ill-conditioned or
// the estimate diverges.
bool lucas_kanade(const std::vector<LevelData>& ref, const std::vector<LevelData>& cur, const Vec2& p0, Vec2& d,
                  const KltConfig& cfg) {
    const int r = cfg.window / 2;
    const int n = (2 * r + 1) * (2 * r + 1);
    std::vector<double> t(n), tx(n), ty(n);
    for (int l = static_cast<int>(ref.size()) - 1; l >= 0; --l) {
        const double s = std::ldexp(1.0, -l);
        const double cx = p0[0] * s, cy = p0[1] * s;
        double dx = d[0] * s, dy = d[1] * s;
        double gxx = 0, gxy = 0, gyy = 0;
        int k = 0;
        for (int j = -r; j <= r; ++j)
            for (int i = -r; i <= r; ++i, ++k) {
                t[k] = sample_cubic(ref[l].image, cx + i, cy + j);
                tx[k] = sample_cubic(ref[l].gx, cx + i, cy + j);
                ty[k] = sample_cubic(ref[l].gy, cx + i, cy + j);
                gxx += tx[k] * tx[k];
                gxy += tx[k] * ty[k];
                gyy += ty[k] * ty[k];
            }
        const double det = gxx * gyy - gxy * gxy;
        const double min_eig = 0.5 * (gxx + gyy) - std::sqrt(0.25 * (gxx - gyy) * (gxx - gyy) + gxy * gxy);
        if (!(min_eig / n >= cfg.min_eigen) || det <= 0.0) return false;
        for (int it = 0; it < cfg.iterations; ++it) {
            double bx = 0, by = 0;
            k = 0;
            for (int j = -r; j <= r; ++j)
                for (int i = -r; i <= r; ++i, ++k) {
                    const double e = t[k] - sample_cubic(cur[l].image, cx + dx + i, cy + dy + j);
                    bx += e * tx[k];
                    by += e * ty[k];
                }
            const double ux = (gyy * bx - gxy * by) / det;
            const double uy = (gxx * by - gxy * bx) / det;
            dx += ux;
            dy += uy;
            if (!std::isfinite(dx) || !std::isfinite(dy)) return false;
            if (std::hypot(ux, uy) < cfg.epsilon) break;
        }
        d = {dx / s, dy / s};
    }
    return true;
}

}  // namespace

std::vector<Vec2> min_eigen_corners(const Frame& frame, int max_count, double min_distance, int margin, int window) {
    const Frame g = frame.to_gray();
    const auto [gx, gy] = gradients(g);
    const int h = g.height(), w = g.width(), r = window / 2;
    std::vector<std::pair<double, int>> score;
    for (int y = std::max(margin, r); y < h - std::max(margin, r); ++y)
        for (int x = std::max(margin, r); x < w - std::max(margin, r); ++x) {
            double a = 0, b = 0, c = 0;
            for (int j = -r; j <= r; ++j)
                for (int i = -r; i <= r; ++i) {
                    const double u = gx.at(y + j, x + i), v = gy.at(y + j, x + i);
                    a += u * u;
                    b += u * v;
                    c += v * v;
                }
            const double e = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
            if (e > 0.0) score.push_back({e, y * w + x});
        }
    std::stable_sort(score.begin(), score.end(), [](const auto& p, const auto& q) { return p.first > q.first; });
    std::vector<Vec2> out;
    for (const auto& [e, idx] : score) {
        if (static_cast<int>(out.size()) >= max_count) break;
        const Vec2 p{static_cast<double>(idx % w), static_cast<double>(idx / w)};
        bool far = true;
        for (const auto& q : out)
            if (std::hypot(p[0] - q[0], p[1] - q[1]) < min_distance) {
                far = false;
                break;
            }
        if (far) out.push_back(p);
    }
    return out;
}

std::vector<Track> klt_track(const std::vector<Frame>& frames, const std::vector<Vec2>& points, const KltConfig& cfg) {
    if (frames.size() < 2) throw std::invalid_argument("tracking needs at least 2 frames");
    if (cfg.window < 3 || cfg.levels < 1 || cfg.iterations < 1) throw std::invalid_argument("invalid tracker settings");
    for (const auto& f : frames)
        if (f.height() != frames[0].height() || f.width() != frames[0].width()) throw ShapeError("frames differ in size");
    const int h = frames[0].height(), w = frames[0].width(), r = cfg.window / 2;
    for (const auto& p : points)
        if (p[0] < r || p[1] < r || p[0] > w - 1 - r || p[1] > h - 1 - r) throw std::invalid_argument("track point too close to the border");

    const auto ref = level_data(frames[0], cfg.levels, true);
    std::vector<std::vector<LevelData>> cur(frames.size());
    parallel_for(frames.size() - 1, [&](std::size_t i) { cur[i + 1] = level_data(frames[i + 1], cfg.levels, false); });

    std::vector<Track> tracks(points.size());
    parallel_for(points.size(), [&](std::size_t k) {
        Track& tr = tracks[k];
        tr.id = static_cast<int>(k);
        tr.points.assign(frames.size(), {});
        tr.points[0] = {points[k][0], points[k][1], true};
        Vec2 d{0.0, 0.0};
        for (std::size_t t = 1; t < frames.size(); ++t) {
            if (!lucas_kanade(ref, cur[t], points[k], d, cfg)) break;
            const double x = points[k][0] + d[0], y = points[k][1] + d[1];
            if (x < 0 || y < 0 || x > w - 1 || y > h - 1) break;
            tr.points[t] = {x, y, true};
        }
    });
    return tracks;
}

TrajectoryReport compare_amplified_trajectories(const std::vector<Track>& orig, const std::vector<Track>& mag, double alpha,
                                                double axis_deg) {
    if (orig.size() != mag.size()) throw std::invalid_argument("track count mismatch");
    const Vec2 p = axis_vector(axis_deg);
    const Vec2 q{-p[1], p[0]};
    TrajectoryReport rep;
    double sa = 0.0, so = 0.0;
    for (std::size_t k = 0; k < orig.size(); ++k) {
        const auto& a = orig[k].points;
        const auto& b = mag[k].points;
        if (a.size() != b.size()) throw std::invalid_argument("frame count mismatch in track " + std::to_string(k));
        if (a.empty() || !a[0].valid || !b[0].valid) continue;
        for (std::size_t t = 0; t < a.size(); ++t) {
            if (!a[t].valid || !b[t].valid) continue;
            const double ox = a[t].x - a[0].x, oy = a[t].y - a[0].y;
            const double mx = b[t].x - b[0].x, my = b[t].y - b[0].y;
            const double ea = (mx * p[0] + my * p[1]) - alpha * (ox * p[0] + oy * p[1]);
            const double eo = (mx * q[0] + my * q[1]) - (ox * q[0] + oy * q[1]);
            sa += ea * ea;
            so += eo * eo;
            rep.axis_max = std::max(rep.axis_max, std::abs(ea));
            rep.orth_max = std::max(rep.orth_max, std::abs(eo));
            ++rep.samples;
        }
    }
    if (rep.samples) {
        rep.axis_rms = std::sqrt(sa / static_cast<double>(rep.samples));
        rep.orth_rms = std::sqrt(so / static_cast<double>(rep.samples));
    }
    return rep;
}

void write_tracks_csv(const fs::path& path, const std::vector<Track>& tracks) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "track_id,frame,x,y,status\n";
    char buf[128];
    for (const auto& tr : tracks)
        for (std::size_t t = 0; t < tr.points.size(); ++t) {
            const auto& p = tr.points[t];
            std::snprintf(buf, sizeof buf, "%d,%zu,%.17g,%.17g,%s\n", tr.id, t, p.x, p.y, p.valid ? "ok" : "lost");
            out << buf;
        }
    if (!out) throw IoError("failed writing " + path.string());
}

// ---- physical displacement ----

void PhysicalSetup::validate() const {
    if (!(freq_hz > 0 && accel_peak > 0 && distance > 0 && focal > 0 && pixel_size > 0))
        throw std::invalid_argument("physical setup values must all be positive");
}

PhysicalWave physical_displacement(const PhysicalSetup& s, double alpha, double duration_s, double fps, bool omega_in_hz) {
    s.validate();
    if (!(duration_s > 0.0 && fps > 0.0)) throw std::invalid_argument("duration and fps must be positive");
    PhysicalWave w;
    w.omega = omega_in_hz ? s.freq_hz : 2.0 * std::numbers::pi * s.freq_hz;
    w.amplitude_m = s.accel_peak / (w.omega * w.omega);
    w.px_per_m = s.focal / (s.distance * s.pixel_size);
    w.peak_px = alpha * w.amplitude_m * w.px_per_m;
    const auto n = static_cast<std::size_t>(std::llround(duration_s * fps));
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fps;
        const double m = w.amplitude_m * std::sin(w.omega * t);
        w.time.push_back(t);
        w.metres.push_back(m);
        w.pixels.push_back(alpha * w.px_per_m * m);
    }
    return w;
}

}  // namespace axmag
