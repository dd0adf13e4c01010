#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "axmag/classical.hpp"
#include "axmag/eval.hpp"
#include "axmag/imaging.hpp"
#include "axmag/parallel.hpp"

namespace axmag {
namespace fs = std::filesystem;

namespace {

struct Scored {
    int level = 0;
    double x = 0.0;
    double method = 0.0;
    double reference = 0.0;
    bool ok = false;
};

Scored score(const TrainSample& s, const Magnifier& method, const std::string& label) {
    Scored r;
    r.level = s.level;
    r.x = s.noise_factor > 0.0 ? s.noise_factor : s.motion_magnitude;
    r.reference = ssim(s.frame_b, s.amplified);
    try {
        r.method = ssim(method(s), s.amplified);
        r.ok = true;
    } catch (const std::exception& e) {
        std::cerr << "warning: skipping " << label << ": " << e.what() << '\n';
    }
    return r;
}

CurvePoint summarize(int level, double x, std::vector<double> values) {
    // Sorted before summing so the result does not depend on sample order.
    std::sort(values.begin(), values.end());
    CurvePoint p;
    p.level = level;
    p.x_value = x;
    p.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    p.ssim_mean = sum / static_cast<double>(p.n);
    if (p.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - p.ssim_mean) * (v - p.ssim_mean);
        p.ssim_std = std::sqrt(ss / static_cast<double>(p.n - 1));
    }
    return p;
}

CurveResult aggregate(const std::vector<Scored>& scored) {
    std::map<int, std::pair<double, std::vector<double>>> method, reference;
    CurveResult r;
    for (const auto& s : scored) {
        reference[s.level].first = s.x;
        reference[s.level].second.push_back(s.reference);
        if (!s.ok) {
            ++r.skipped;
            continue;
        }
        method[s.level].first = s.x;
        method[s.level].second.push_back(s.method);
    }
    for (auto& [level, v] : method) r.method.push_back(summarize(level, v.first, std::move(v.second)));
    for (auto& [level, v] : reference) r.reference.push_back(summarize(level, v.first, std::move(v.second)));
    return r;
}

double mean_channel(const Frame& map, int c) {
    double s = 0.0;
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) s += map.at(y, x, c);
    return s / (static_cast<double>(map.height()) * map.width());
}

}  // namespace

CurveResult run_curve(const std::vector<TrainSample>& samples, const Magnifier& method) {
    std::vector<Scored> scored(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) { scored[i] = score(samples[i], method, "sample " + std::to_string(i)); });
    return aggregate(scored);
}

CurveResult run_curve(const fs::path& dataset, const Magnifier& method) {
    const auto dirs = list_samples(dataset);
    if (dirs.empty()) throw IoError("no samples in " + dataset.string());
    std::vector<Scored> scored(dirs.size());
    parallel_for(dirs.size(), [&](std::size_t i) { scored[i] = score(read_sample(dirs[i]), method, dirs[i].string()); });
    return aggregate(scored);
}

MagnificationSpec spec_for_sample(const TrainSample& s) {
    MagnificationSpec m;
    m.angle_deg = s.motion.angle_deg;
    Frame map = s.mag_map;
    for (float& v : map.data()) v -= 1.0f;
    m.alpha_par = std::max(0.0, mean_channel(map, 0));
    m.alpha_perp = std::max(0.0, mean_channel(map, 1));
    m.per_pixel_map = std::move(map);
    return m;
}

Magnifier identity_magnifier() {
    return [](const TrainSample& s) { return s.frame_b; };
}

Magnifier oracle_magnifier() {
    return [](const TrainSample& s) { return s.amplified; };
}

Magnifier msm_magnifier(const Model<float>& model) {
    return [&model](const TrainSample& s) { return msm_forward(model, s.frame_a, s.frame_b, spec_for_sample(s)); };
}

Magnifier axial_phase_magnifier() {
    return [](const TrainSample& s) {
        PyramidSpec p;
        p.orientations = 2;
        p.octave_fraction = 0.5;
        return phase_mag_axial({s.frame_a, s.frame_b}, p, spec_for_sample(s), std::nullopt)[1];
    };
}

Magnifier phase_magnifier() {
    return [](const TrainSample& s) {
        PyramidSpec p;
        p.orientations = 4;
        p.octave_fraction = 0.5;
        return phase_mag_generic({s.frame_a, s.frame_b}, spec_for_sample(s).alpha_par, std::nullopt, p)[1];
    };
}

void write_curve_csv(const fs::path& path, const std::vector<CurvePoint>& curve) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "level,x_value,ssim_mean,ssim_std,n\n";
    char buf[160];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%zu\n", p.level, p.x_value, p.ssim_mean, p.ssim_std, p.n);
        out << buf;
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void write_curve_svg(const fs::path& path, const std::string& title, const std::vector<CurveSeries>& series) {
    constexpr double kW = 640, kH = 400, kL = 60, kR = 150, kT = 40, kB = 50;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            if (p.x_value <= 0.0) continue;
            xmin = std::min(xmin, std::log10(p.x_value));
            xmax = std::max(xmax, std::log10(p.x_value));
            ymin = std::min(ymin, p.ssim_mean);
            ymax = std::max(ymax, p.ssim_mean);
        }
    if (!(xmax > xmin)) xmin -= 1.0, xmax += 1.0;
    if (!(ymax > ymin)) ymin -= 0.05, ymax += 0.05;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    auto px = [&](double x) { return kL + (std::log10(x) - xmin) / (xmax - xmin) * (kW - kL - kR); };
    auto py = [&](double y) { return kH - kB - (y - ymin) / (ymax - ymin) * (kH - kT - kB); };

    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"};
    char buf[256];
    std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\">\n", kW, kH);
    out << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">", kL);
    out << buf << title << "</text>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n", kL, kT,
                  kW - kL - kR, kH - kT - kB);
    out << buf;
    for (int i = 0; i <= 4; ++i) {
        const double y = ymin + (ymax - ymin) * i / 4.0;
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">%.3f</text>\n",
                      kL - 6, py(y) + 4, y);
        out << buf;
    }
    for (int e = static_cast<int>(std::ceil(xmin)); e <= static_cast<int>(std::floor(xmax)); ++e) {
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">%g</text>\n",
                      px(std::pow(10.0, e)), kH - kB + 16, std::pow(10.0, e));
        out << buf;
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* c = colours[i % 6];
        out << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
        for (const auto& p : series[i].points) {
            if (p.x_value <= 0.0) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(p.x_value), py(p.ssim_mean));
            out << buf;
        }
        out << "\"/>\n";
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" fill=\"%s\">", kW - kR + 10,
                      kT + 16 + 18.0 * i, c);
        out << buf << series[i].label << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace axmag
