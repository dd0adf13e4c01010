#include "axmag/steerable_pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "axmag/image_io.hpp"

namespace axmag {
namespace {

constexpr double kPi = std::numbers::pi;

// Lowpass boundary j in log-radius units u = log2(r/pi)/b: one below
// u = -j-1, zero above u = -j, cosine in between.
double lowpass_boundary(int j, double u) {
    const double t = u + j + 1.0;
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    return std::cos(0.5 * kPi * t);
}

double angular_constant(int k) {
    // alpha_K^2 = 2^(2(K-1)) ((K-1)!)^2 / (K (2K-2)!)
    const double log_a2 = 2.0 * (k - 1) * std::log(2.0) + 2.0 * std::lgamma(k) - std::log(static_cast<double>(k)) -
                          std::lgamma(2.0 * k - 1.0);
    return std::exp(0.5 * log_a2);
}

int cropped_size(int n, double scale) {
    const int m = 2 * static_cast<int>(std::ceil(n * scale / 2.0 - 1e-9));
    return std::clamp(m, 1, n);
}

}  // namespace

const PyramidBand& SteerablePyramid::band(int scale, int orientation) const {
    if (scale < 0 || scale >= spec.depth || orientation < 0 || orientation >= spec.orientations) {
        throw std::out_of_range("pyramid band index out of range");
    }
    return bands[static_cast<std::size_t>(scale) * spec.orientations + orientation];
}

PyramidBand& SteerablePyramid::band(int scale, int orientation) {
    return const_cast<PyramidBand&>(std::as_const(*this).band(scale, orientation));
}

int max_pyramid_depth(int rows, int cols, double octave_fraction) {
    int depth = 0;
    while (true) {
        const double s = std::pow(2.0, -(depth + 1) * octave_fraction);
        if (cropped_size(rows, s) < 8 || cropped_size(cols, s) < 8) break;
        ++depth;
        if (depth > 64) break;
    }
    return depth;
}

SteerableFilterBank::SteerableFilterBank(int rows, int cols, PyramidSpec spec)
    : rows_(rows), cols_(cols), spec_(spec) {
    if (spec_.orientations < 2) throw std::invalid_argument("pyramid needs at least two orientations");
    if (spec_.octave_fraction != 1.0 && spec_.octave_fraction != 0.5) {
        throw std::invalid_argument("octave_fraction must be 1 or 0.5");
    }
    if (rows <= 0 || cols <= 0) throw ShapeError("pyramid dimensions must be positive");
    const int max_depth = max_pyramid_depth(rows, cols, spec_.octave_fraction);
    if (spec_.depth == 0) spec_.depth = max_depth;
    if (spec_.depth < 1 || spec_.depth > max_depth) {
        throw ShapeError("frame too small for requested pyramid depth");
    }

    const int depth = spec_.depth;
    const double b = spec_.octave_fraction;
    const int k_count = spec_.orientations;
    const double alpha = angular_constant(k_count) * std::sqrt(2.0);
    const double offset = spec_.orientation_offset_deg * kPi / 180.0;

    auto make_grid = [&](double s) {
        Grid g;
        g.rows = cropped_size(rows, s);
        g.cols = cropped_size(cols, s);
        g.full_index.resize(static_cast<std::size_t>(g.rows) * g.cols);
        for (int a = 0; a < g.rows; ++a) {
            const int ky = (signed_bin(a, g.rows) + rows) % rows;
            for (int c = 0; c < g.cols; ++c) {
                const int kx = (signed_bin(c, g.cols) + cols) % cols;
                g.full_index[static_cast<std::size_t>(a) * g.cols + c] = static_cast<std::size_t>(ky) * cols + kx;
            }
        }
        return g;
    };
    // log-radius coordinate and angle of a full-grid bin
    auto polar = [&](std::size_t full, double& u, double& theta) {
        const int ky = signed_bin(static_cast<int>(full / cols), rows);
        const int kx = signed_bin(static_cast<int>(full % cols), cols);
        const double wy = 2.0 * kPi * ky / rows;
        const double wx = 2.0 * kPi * kx / cols;
        const double r = std::hypot(wx, wy);
        u = r > 0.0 ? std::log2(r / kPi) / b : -1e300;
        theta = std::atan2(wy, wx);
    };

    for (int j = 0; j < depth; ++j) grids_.push_back(make_grid(std::pow(2.0, -j * b)));
    grids_.push_back(make_grid(std::pow(2.0, -depth * b)));

    for (int j = 0; j < depth; ++j) {
        const Grid& g = grids_[j];
        for (int k = 0; k < k_count; ++k) {
            BandFilter f;
            f.scale = j;
            f.orientation = k;
            f.response.resize(g.full_index.size());
            const double centre = offset + kPi * k / k_count;
            for (std::size_t i = 0; i < g.full_index.size(); ++i) {
                double u = 0.0, theta = 0.0;
                polar(g.full_index[i], u, theta);
                const double lo_a = lowpass_boundary(j, u);
                const double lo_b = lowpass_boundary(j + 1, u);
                const double radial = std::sqrt(std::max(0.0, lo_a * lo_a - lo_b * lo_b));
                const double c = std::cos(theta - centre);
                const double angular = c > 0.0 ? alpha * std::pow(c, k_count - 1) : 0.0;
                f.response[i] = radial * angular;
            }
            filters_.push_back(std::move(f));
        }
    }

    highpass_.resize(static_cast<std::size_t>(rows) * cols);
    for (std::size_t i = 0; i < highpass_.size(); ++i) {
        double u = 0.0, theta = 0.0;
        polar(i, u, theta);
        const double lo = lowpass_boundary(0, u);
        highpass_[i] = std::sqrt(std::max(0.0, 1.0 - lo * lo));
    }
    const Grid& lg = grids_.back();
    lowpass_.resize(lg.full_index.size());
    for (std::size_t i = 0; i < lowpass_.size(); ++i) {
        double u = 0.0, theta = 0.0;
        polar(lg.full_index[i], u, theta);
        lowpass_[i] = lowpass_boundary(depth, u);
    }
}

SteerablePyramid SteerableFilterBank::build(const Frame& gray) const {
    if (gray.channels() != 1) throw ShapeError("build_csp expects a single-channel frame");
    std::vector<double> plane(gray.data().begin(), gray.data().end());
    if (gray.height() != rows_ || gray.width() != cols_) throw ShapeError("frame does not match filter bank");
    return build(plane);
}

SteerablePyramid SteerableFilterBank::build(const std::vector<double>& plane) const {
    const std::size_t n = static_cast<std::size_t>(rows_) * cols_;
    if (plane.size() != n) throw ShapeError("plane does not match filter bank");
    std::vector<cplx> spectrum(plane.begin(), plane.end());
    fft2d(spectrum, rows_, cols_, false);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& v : spectrum) v *= norm;

    SteerablePyramid pyr;
    pyr.spec = spec_;
    pyr.source_rows = rows_;
    pyr.source_cols = cols_;
    pyr.bands.reserve(filters_.size());
    for (const auto& f : filters_) {
        const Grid& g = grids_[f.scale];
        PyramidBand band;
        band.scale = f.scale;
        band.orientation = f.orientation;
        band.rows = g.rows;
        band.cols = g.cols;
        band.coeffs.resize(g.full_index.size());
        for (std::size_t i = 0; i < g.full_index.size(); ++i) band.coeffs[i] = spectrum[g.full_index[i]] * f.response[i];
        fft2d(band.coeffs, g.rows, g.cols, true);
        const double bn = 1.0 / std::sqrt(static_cast<double>(band.coeffs.size()));
        for (auto& v : band.coeffs) v *= bn;
        pyr.bands.push_back(std::move(band));
    }

    if (spec_.include_residuals) {
        std::vector<cplx> hp(n);
        for (std::size_t i = 0; i < n; ++i) hp[i] = spectrum[i] * highpass_[i];
        fft2d(hp, rows_, cols_, true);
        pyr.highpass.resize(n);
        for (std::size_t i = 0; i < n; ++i) pyr.highpass[i] = hp[i].real() * norm;

        const Grid& lg = grids_.back();
        std::vector<cplx> lp(lg.full_index.size());
        for (std::size_t i = 0; i < lp.size(); ++i) lp[i] = spectrum[lg.full_index[i]] * lowpass_[i];
        fft2d(lp, lg.rows, lg.cols, true);
        const double ln = 1.0 / std::sqrt(static_cast<double>(lp.size()));
        pyr.lowpass_rows = lg.rows;
        pyr.lowpass_cols = lg.cols;
        pyr.lowpass.resize(lp.size());
        for (std::size_t i = 0; i < lp.size(); ++i) pyr.lowpass[i] = lp[i].real() * ln;
    }
    return pyr;
}

std::vector<double> SteerableFilterBank::collapse_plane(const SteerablePyramid& pyr) const {
    if (pyr.source_rows != rows_ || pyr.source_cols != cols_ || pyr.bands.size() != filters_.size()) {
        throw ShapeError("pyramid does not match filter bank");
    }
    const std::size_t n = static_cast<std::size_t>(rows_) * cols_;
    std::vector<cplx> spectrum(n, cplx(0.0, 0.0));

    for (std::size_t b = 0; b < filters_.size(); ++b) {
        const auto& f = filters_[b];
        const Grid& g = grids_[f.scale];
        const PyramidBand& band = pyr.bands[b];
        if (band.rows != g.rows || band.cols != g.cols || band.coeffs.size() != g.full_index.size()) {
            throw ShapeError("inconsistent band dimensions");
        }
        std::vector<cplx> c = band.coeffs;
        fft2d(c, g.rows, g.cols, false);
        const double bn = 1.0 / std::sqrt(static_cast<double>(c.size()));
        for (std::size_t i = 0; i < c.size(); ++i) spectrum[g.full_index[i]] += c[i] * (bn * f.response[i]);
    }

    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    if (spec_.include_residuals && !pyr.highpass.empty()) {
        if (pyr.highpass.size() != n) throw ShapeError("inconsistent highpass dimensions");
        std::vector<cplx> hp(pyr.highpass.begin(), pyr.highpass.end());
        fft2d(hp, rows_, cols_, false);
        for (std::size_t i = 0; i < n; ++i) spectrum[i] += hp[i] * (norm * highpass_[i]);
    }
    if (spec_.include_residuals && !pyr.lowpass.empty()) {
        const Grid& lg = grids_.back();
        if (pyr.lowpass.size() != lg.full_index.size()) throw ShapeError("inconsistent lowpass dimensions");
        std::vector<cplx> lp(pyr.lowpass.begin(), pyr.lowpass.end());
        fft2d(lp, lg.rows, lg.cols, false);
        const double ln = 1.0 / std::sqrt(static_cast<double>(lp.size()));
        for (std::size_t i = 0; i < lp.size(); ++i) spectrum[lg.full_index[i]] += lp[i] * (ln * lowpass_[i]);
    }

    fft2d(spectrum, rows_, cols_, true);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = spectrum[i].real() * norm;
    return out;
}

Frame SteerableFilterBank::collapse(const SteerablePyramid& pyr) const {
    const auto plane = collapse_plane(pyr);
    Frame out(rows_, cols_, 1);
    for (std::size_t i = 0; i < plane.size(); ++i) out.data()[i] = static_cast<float>(plane[i]);
    return out;
}

double SteerableFilterBank::tight_frame_deviation() const {
    const std::size_t n = static_cast<std::size_t>(rows_) * cols_;
    std::vector<double> direct(n, 0.0);
    std::vector<double> mirrored(n, 0.0);
    auto mirror = [&](std::size_t full) {
        const std::size_t ky = full / cols_;
        const std::size_t kx = full % cols_;
        return ((rows_ - ky) % rows_) * cols_ + (cols_ - kx) % cols_;
    };
    for (const auto& f : filters_) {
        const Grid& g = grids_[f.scale];
        for (std::size_t i = 0; i < g.full_index.size(); ++i) {
            const double p = f.response[i] * f.response[i];
            direct[g.full_index[i]] += p;
            mirrored[mirror(g.full_index[i])] += p;
        }
    }
    std::vector<double> total(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) total[i] = highpass_[i] * highpass_[i] + 0.5 * (direct[i] + mirrored[i]);
    const Grid& lg = grids_.back();
    for (std::size_t i = 0; i < lowpass_.size(); ++i) total[lg.full_index[i]] += lowpass_[i] * lowpass_[i];
    double worst = 0.0;
    for (double t : total) worst = std::max(worst, std::abs(t - 1.0));
    return worst;
}

double SteerableFilterBank::scale_peak_radius(int scale) const {
    return kPi * std::pow(2.0, -(scale + 1) * spec_.octave_fraction);
}

SteerablePyramid build_csp(const Frame& gray, const PyramidSpec& spec) {
    return SteerableFilterBank(gray.height(), gray.width(), spec).build(gray);
}

Frame collapse_csp(const SteerablePyramid& pyr) {
    return SteerableFilterBank(pyr.source_rows, pyr.source_cols, pyr.spec).collapse(pyr);
}

std::vector<double> band_phase(const SteerablePyramid& pyr, int scale, int orientation) {
    const auto& band = pyr.band(scale, orientation);
    std::vector<double> phase(band.coeffs.size());
    for (std::size_t i = 0; i < phase.size(); ++i) {
        double p = std::arg(band.coeffs[i]);
        if (p <= -kPi) p = kPi;
        phase[i] = p;
    }
    return phase;
}

namespace {

Tensor complex_tensor(const PyramidBand& band) {
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(band.rows), static_cast<std::uint32_t>(band.cols), 2};
    t.values.reserve(band.coeffs.size() * 2);
    for (const auto& c : band.coeffs) {
        t.values.push_back(static_cast<float>(c.real()));
        t.values.push_back(static_cast<float>(c.imag()));
    }
    return t;
}

Tensor real_tensor(const std::vector<double>& v, int rows, int cols) {
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)};
    t.values.assign(v.begin(), v.end());
    return t;
}

}  // namespace

void save_pyramid(const std::filesystem::path& dir, const SteerablePyramid& pyr) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "pyramid.txt");
    if (!manifest) throw IoError("cannot write pyramid manifest in " + dir.string());
    manifest << "source " << pyr.source_rows << ' ' << pyr.source_cols << '\n';
    manifest << "orientations " << pyr.spec.orientations << '\n';
    manifest << "octave_fraction " << pyr.spec.octave_fraction << '\n';
    manifest << "depth " << pyr.spec.depth << '\n';
    manifest << "include_residuals " << (pyr.spec.include_residuals ? 1 : 0) << '\n';
    manifest << "orientation_offset_deg " << pyr.spec.orientation_offset_deg << '\n';
    for (const auto& band : pyr.bands) {
        const std::string name = "band_s" + std::to_string(band.scale) + "_o" + std::to_string(band.orientation) + ".axtf";
        write_axtf(dir / name, complex_tensor(band));
        manifest << "band " << band.scale << ' ' << band.orientation << ' ' << band.rows << ' ' << band.cols << ' '
                 << name << '\n';
    }
    if (!pyr.highpass.empty()) {
        write_axtf(dir / "highpass.axtf", real_tensor(pyr.highpass, pyr.source_rows, pyr.source_cols));
        manifest << "highpass " << pyr.source_rows << ' ' << pyr.source_cols << " highpass.axtf\n";
    }
    if (!pyr.lowpass.empty()) {
        write_axtf(dir / "lowpass.axtf", real_tensor(pyr.lowpass, pyr.lowpass_rows, pyr.lowpass_cols));
        manifest << "lowpass " << pyr.lowpass_rows << ' ' << pyr.lowpass_cols << " lowpass.axtf\n";
    }
}

SteerablePyramid load_pyramid(const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "pyramid.txt");
    if (!manifest) throw IoError("missing pyramid manifest in " + dir.string());
    SteerablePyramid pyr;
    std::string line;
    while (std::getline(manifest, line)) {
        std::istringstream in(line);
        std::string key;
        in >> key;
        if (key == "source") {
            in >> pyr.source_rows >> pyr.source_cols;
        } else if (key == "orientations") {
            in >> pyr.spec.orientations;
        } else if (key == "octave_fraction") {
            in >> pyr.spec.octave_fraction;
        } else if (key == "depth") {
            in >> pyr.spec.depth;
        } else if (key == "include_residuals") {
            int v = 1;
            in >> v;
            pyr.spec.include_residuals = v != 0;
        } else if (key == "orientation_offset_deg") {
            in >> pyr.spec.orientation_offset_deg;
        } else if (key == "band") {
            PyramidBand band;
            std::string file;
            in >> band.scale >> band.orientation >> band.rows >> band.cols >> file;
            const Tensor t = read_axtf(dir / file);
            if (t.dims.size() != 3 || static_cast<int>(t.dims[0]) != band.rows ||
                static_cast<int>(t.dims[1]) != band.cols || t.dims[2] != 2) {
                throw ShapeError("band tensor does not match manifest");
            }
            band.coeffs.resize(static_cast<std::size_t>(band.rows) * band.cols);
            for (std::size_t i = 0; i < band.coeffs.size(); ++i) band.coeffs[i] = cplx(t.values[2 * i], t.values[2 * i + 1]);
            pyr.bands.push_back(std::move(band));
        } else if (key == "highpass" || key == "lowpass") {
            int r = 0, c = 0;
            std::string file;
            in >> r >> c >> file;
            const Tensor t = read_axtf(dir / file);
            if (t.element_count() != static_cast<std::size_t>(r) * c) throw ShapeError("residual tensor mismatch");
            std::vector<double> v(t.values.begin(), t.values.end());
            if (key == "highpass") {
                pyr.highpass = std::move(v);
            } else {
                pyr.lowpass_rows = r;
                pyr.lowpass_cols = c;
                pyr.lowpass = std::move(v);
            }
        } else if (!key.empty()) {
            throw IoError("unknown pyramid manifest entry: " + key);
        }
    }
    return pyr;
}

}  // namespace axmag
