#include "axmag/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "axmag/imaging.hpp"
#include "axmag/parallel.hpp"

namespace axmag {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSmoothSigma = 2.0;

double wrap_phase(double p) { return std::remainder(p, 2.0 * kPi); }

void check_sequence(const std::vector<Frame>& frames, std::size_t min_count) {
    if (frames.size() < min_count) {
        throw std::invalid_argument("need at least " + std::to_string(min_count) + " frames");
    }
    for (const auto& f : frames) {
        if (!f.same_shape(frames[0])) throw ShapeError("frames in a sequence must share one shape");
    }
    if (frames[0].empty()) throw ShapeError("empty frame");
}

std::vector<double> channel_plane(const Frame& f, int c) {
    std::vector<double> out(static_cast<std::size_t>(f.height()) * f.width());
    const auto d = f.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = d[i * f.channels() + c];
    return out;
}

void store_plane(Frame& f, int c, const std::vector<double>& plane) {
    auto d = f.data();
    for (std::size_t i = 0; i < plane.size(); ++i) d[i * f.channels() + c] = static_cast<float>(plane[i]);
}

// Separable Gaussian with replicate borders on a rows x cols double grid.
void blur_grid(std::vector<double>& v, int rows, int cols, const std::vector<double>& k) {
    const int r = static_cast<int>(k.size() / 2);
    std::vector<double> tmp(v.size());
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * v[y * cols + std::clamp(x + i, 0, cols - 1)];
            tmp[y * cols + x] = s;
        }
    }
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * tmp[std::clamp(y + i, 0, rows - 1) * cols + x];
            v[y * cols + x] = s;
        }
    }
}

// Per-band amplification, one value per band coefficient.
using BandAlphas = std::vector<std::vector<double>>;

// Smooths the phase change with |c|^2 weights, then rotates the coefficients.
void amplify_band(PyramidBand& band, const std::vector<double>& delta, const std::vector<double>& alpha,
                  const std::vector<double>& kernel) {
    const std::size_t n = band.coeffs.size();
    std::vector<double> w(n), wd(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::norm(band.coeffs[i]);
        wd[i] = w[i] * delta[i];
    }
    blur_grid(w, band.rows, band.cols, kernel);
    blur_grid(wd, band.rows, band.cols, kernel);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = w[i] > 1e-20 ? wd[i] / w[i] : 0.0;
        const double a = alpha[i] * d;
        if (a != 0.0) band.coeffs[i] *= std::polar(1.0, a);
    }
}

std::vector<double> band_phases(const PyramidBand& band) {
    std::vector<double> p(band.coeffs.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::arg(band.coeffs[i]);
    return p;
}

// Magnifies one channel of the sequence in place.
void phase_magnify_planes(std::vector<std::vector<double>>& planes, const SteerableFilterBank& bank,
                          const BandAlphas& alphas, const std::optional<TemporalFilterSpec>& tf, ReferenceMode mode) {
    const std::size_t steps = planes.size();
    const auto kernel = gaussian_kernel(kSmoothSigma);
    const SteerablePyramid ref = bank.build(planes[0]);
    const std::size_t nbands = ref.bands.size();

    if (!tf && mode == ReferenceMode::Static) {
        std::vector<std::vector<double>> ref_phase(nbands);
        for (std::size_t b = 0; b < nbands; ++b) ref_phase[b] = band_phases(ref.bands[b]);
        parallel_for(steps, [&](std::size_t t) {
            SteerablePyramid pyr = bank.build(planes[t]);
            for (std::size_t b = 0; b < nbands; ++b) {
                auto& band = pyr.bands[b];
                std::vector<double> delta(band.coeffs.size());
                for (std::size_t i = 0; i < delta.size(); ++i)
                    delta[i] = wrap_phase(std::arg(band.coeffs[i]) - ref_phase[b][i]);
                amplify_band(band, delta, alphas[b], kernel);
            }
            planes[t] = bank.collapse_plane(pyr);
        });
        return;
    }

    // Phase change of every coefficient against the reference, per frame.
    std::vector<std::size_t> offset(nbands + 1, 0);
    for (std::size_t b = 0; b < nbands; ++b) offset[b + 1] = offset[b] + ref.bands[b].coeffs.size();
    std::vector<std::vector<double>> deltas(steps, std::vector<double>(offset.back(), 0.0));
    std::vector<double> prev(offset.back());
    for (std::size_t b = 0; b < nbands; ++b) {
        const auto p = band_phases(ref.bands[b]);
        std::copy(p.begin(), p.end(), prev.begin() + offset[b]);
    }
    const std::vector<double> first = prev;
    for (std::size_t t = 1; t < steps; ++t) {
        const SteerablePyramid pyr = bank.build(planes[t]);
        for (std::size_t b = 0; b < nbands; ++b) {
            const auto& band = pyr.bands[b];
            for (std::size_t i = 0; i < band.coeffs.size(); ++i) {
                const std::size_t k = offset[b] + i;
                const double p = std::arg(band.coeffs[i]);
                if (mode == ReferenceMode::Dynamic) {
                    deltas[t][k] = deltas[t - 1][k] + wrap_phase(p - prev[k]);
                    prev[k] = p;
                } else {
                    deltas[t][k] = wrap_phase(p - first[k]);
                }
            }
        }
    }
    if (tf) temporal_bandpass_sequence(deltas, *tf);

    parallel_for(steps, [&](std::size_t t) {
        SteerablePyramid pyr = bank.build(planes[t]);
        for (std::size_t b = 0; b < nbands; ++b) {
            auto& band = pyr.bands[b];
            const std::vector<double> delta(deltas[t].begin() + offset[b], deltas[t].begin() + offset[b + 1]);
            amplify_band(band, delta, alphas[b], kernel);
        }
        planes[t] = bank.collapse_plane(pyr);
    });
}

std::vector<Frame> run_phase(const std::vector<Frame>& frames, const SteerableFilterBank& bank, const BandAlphas& alphas,
                             const std::optional<TemporalFilterSpec>& tf, ReferenceMode mode) {
    std::vector<Frame> out(frames.size());
    for (std::size_t t = 0; t < frames.size(); ++t) out[t] = Frame(frames[t].height(), frames[t].width(), frames[t].channels());
    for (int c = 0; c < frames[0].channels(); ++c) {
        std::vector<std::vector<double>> planes(frames.size());
        for (std::size_t t = 0; t < frames.size(); ++t) planes[t] = channel_plane(frames[t], c);
        phase_magnify_planes(planes, bank, alphas, tf, mode);
        for (std::size_t t = 0; t < frames.size(); ++t) store_plane(out[t], c, planes[t]);
    }
    return out;
}

// Band grid sizes, read off the pyramid of a zero plane.
std::vector<std::pair<int, int>> band_grids(const SteerableFilterBank& bank) {
    const auto pyr = bank.build(std::vector<double>(static_cast<std::size_t>(bank.rows()) * bank.cols(), 0.0));
    std::vector<std::pair<int, int>> grids;
    for (const auto& b : pyr.bands) grids.emplace_back(b.rows, b.cols);
    return grids;
}

}  // namespace

std::vector<Frame> linear_evm(const std::vector<Frame>& frames, double alpha, const TemporalFilterSpec& tf) {
    check_sequence(frames, 3);
    tf.validate();
    if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");
    if (alpha == 0.0) return frames;

    // Mid level plus base equals G2 I, so the amplified signal is the
    // bandpassed sigma-2 blur. The fine residual I - G2 I is left as is.
    const std::size_t steps = frames.size();
    std::vector<std::vector<double>> series(steps);
    parallel_for(steps, [&](std::size_t t) {
        const Frame coarse = gaussian_blur(frames[t], 2.0);
        series[t].assign(coarse.data().begin(), coarse.data().end());
    });
    temporal_bandpass_sequence(series, tf);

    std::vector<Frame> out = frames;
    for (std::size_t t = 0; t < steps; ++t) {
        auto d = out[t].data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(d[i] + alpha * series[t][i]);
    }
    return out;
}

std::vector<Frame> phase_mag_generic(const std::vector<Frame>& frames, double alpha,
                                     const std::optional<TemporalFilterSpec>& tf, const PyramidSpec& spec,
                                     ReferenceMode mode) {
    check_sequence(frames, 2);
    if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");
    if (tf) tf->validate();
    const SteerableFilterBank bank(frames[0].height(), frames[0].width(), spec);
    BandAlphas alphas;
    for (const auto& [r, c] : band_grids(bank)) alphas.emplace_back(static_cast<std::size_t>(r) * c, alpha);
    return run_phase(frames, bank, alphas, tf, mode);
}

std::vector<Frame> phase_mag_axial(const std::vector<Frame>& frames, const PyramidSpec& spec,
                                   const MagnificationSpec& mspec, const std::optional<TemporalFilterSpec>& tf) {
    if (spec.orientations != 2) throw std::invalid_argument("axial phase magnification needs exactly 2 orientations");
    check_sequence(frames, 2);
    mspec.validate(frames[0].height(), frames[0].width());
    if (tf) tf->validate();

    PyramidSpec rotated = spec;
    rotated.orientation_offset_deg = mspec.angle_deg;
    const SteerableFilterBank bank(frames[0].height(), frames[0].width(), rotated);
    const int rows = frames[0].height();
    const int cols = frames[0].width();

    const auto grids = band_grids(bank);
    const auto layout = bank.build(std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0));
    BandAlphas alphas;
    for (std::size_t b = 0; b < grids.size(); ++b) {
        const auto [br, bc] = grids[b];
        const int axis = layout.bands[b].orientation;  // 0 along the angle, 1 orthogonal
        std::vector<double> a(static_cast<std::size_t>(br) * bc, axis == 0 ? mspec.alpha_par : mspec.alpha_perp);
        if (mspec.per_pixel_map) {
            // nearest source pixel for each band sample
            for (int y = 0; y < br; ++y) {
                const int sy = std::min(rows - 1, static_cast<int>((y + 0.5) * rows / br));
                for (int x = 0; x < bc; ++x) {
                    const int sx = std::min(cols - 1, static_cast<int>((x + 0.5) * cols / bc));
                    a[static_cast<std::size_t>(y) * bc + x] = mspec.per_pixel_map->at(sy, sx, axis);
                }
            }
        }
        alphas.push_back(std::move(a));
    }
    return run_phase(frames, bank, alphas, tf, mspec.mode);
}

}  // namespace axmag
