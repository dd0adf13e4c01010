#pragma once

#include <filesystem>
#include <vector>

#include "axmag/fft.hpp"
#include "axmag/frame.hpp"

namespace axmag {

/// Layout of a complex steerable pyramid.
struct PyramidSpec {
    int orientations = 4;
    /// Radial spacing between scales in octaves: 1 (octave) or 0.5 (half-octave).
    double octave_fraction = 1.0;
    /// Number of oriented scales; 0 picks the deepest level whose lowpass
    /// residual is still at least 8x8.
    int depth = 0;
    bool include_residuals = true;
    /// Rotation of the angular windows; orientation k is centred on
    /// orientation_offset_deg + 180 k / orientations.
    double orientation_offset_deg = 0.0;
};

/// Complex subband stored on its own (possibly cropped) frequency grid.
struct PyramidBand {
    int scale = 0;
    int orientation = 0;
    int rows = 0;
    int cols = 0;
    std::vector<cplx> coeffs;
};

struct SteerablePyramid {
    PyramidSpec spec;
    int source_rows = 0;
    int source_cols = 0;
    std::vector<PyramidBand> bands;  // scale-major, orientation-minor
    std::vector<double> highpass;    // source_rows x source_cols
    int lowpass_rows = 0;
    int lowpass_cols = 0;
    std::vector<double> lowpass;

    int depth() const { return spec.depth; }
    const PyramidBand& band(int scale, int orientation) const;
    PyramidBand& band(int scale, int orientation);
};

/// Deepest pyramid whose lowpass grid is at least 8x8.
int max_pyramid_depth(int rows, int cols, double octave_fraction);

/// Frequency-domain filter bank for fixed image dimensions. Building the
/// bank once and reusing it for every frame of a sequence avoids
/// recomputing windows.
///
/// Radial windows are cosine transitions in log-radius spaced by
/// `octave_fraction` octaves, angular windows are cos^(K-1) lobes on a
/// half-plane. Together with the highpass and lowpass residual they form a
/// tight frame for real input, so collapse(build(x)) == x.
class SteerableFilterBank {
public:
    SteerableFilterBank(int rows, int cols, PyramidSpec spec);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const PyramidSpec& spec() const { return spec_; }

    SteerablePyramid build(const Frame& gray) const;
    SteerablePyramid build(const std::vector<double>& plane) const;
    std::vector<double> collapse_plane(const SteerablePyramid& pyr) const;
    Frame collapse(const SteerablePyramid& pyr) const;

    /// max over frequency samples of |HP^2 + LP^2 + sum_b (|H_b(w)|^2 + |H_b(-w)|^2)/2 - 1|,
    /// evaluated on the filter arrays actually used by build/collapse.
    double tight_frame_deviation() const;

    /// Highest band centre frequency per scale, in radians per source pixel.
    double scale_peak_radius(int scale) const;

private:
    struct Grid {
        int rows = 0;
        int cols = 0;
        std::vector<std::size_t> full_index;  // cropped bin -> full-grid bin
    };
    struct BandFilter {
        int scale = 0;
        int orientation = 0;
        std::vector<double> response;  // on grids_[scale]
    };

    int rows_;
    int cols_;
    PyramidSpec spec_;
    std::vector<Grid> grids_;  // one per scale, plus the lowpass grid last
    std::vector<BandFilter> filters_;
    std::vector<double> highpass_;
    std::vector<double> lowpass_;  // on grids_.back()
};

SteerablePyramid build_csp(const Frame& gray, const PyramidSpec& spec);
Frame collapse_csp(const SteerablePyramid& pyr);

/// Elementwise phase of a band in (-pi, pi].
std::vector<double> band_phase(const SteerablePyramid& pyr, int scale, int orientation);

/// Writes one AXTF tensor per band (rows, cols, 2 for re/im) plus residuals
/// and a manifest `pyramid.txt`.
void save_pyramid(const std::filesystem::path& dir, const SteerablePyramid& pyr);
SteerablePyramid load_pyramid(const std::filesystem::path& dir);

}  // namespace axmag
