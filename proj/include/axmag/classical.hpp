#pragma once

#include <optional>
#include <vector>

#include "axmag/frame.hpp"
#include "axmag/magnification.hpp"
#include "axmag/steerable_pyramid.hpp"
#include "axmag/temporal_filter.hpp"

namespace axmag {

/// Linear Eulerian magnification. Each frame is split into a fine detail
/// level (I - G2 I), a mid level (G2 I - G4 I) and a base (G4 I); the mid
/// level and base are temporally bandpassed and added back scaled by alpha.
/// The fine level is left alone to keep noise down.
std::vector<Frame> linear_evm(const std::vector<Frame>& frames, double alpha, const TemporalFilterSpec& tf);

/// Phase-based magnification with a complex steerable pyramid. Per band the
/// wrapped phase change against the reference (frame 0, or accumulated
/// frame-to-frame changes in dynamic mode) is optionally bandpassed,
/// smoothed with magnitude weights and multiplied by alpha before the
/// coefficients are rotated. Residuals pass through.
std::vector<Frame> phase_mag_generic(const std::vector<Frame>& frames, double alpha,
                                     const std::optional<TemporalFilterSpec>& tf, const PyramidSpec& spec,
                                     ReferenceMode mode = ReferenceMode::Static);

/// Two-orientation variant whose angular windows are centred on the
/// requested axis and its orthogonal; the first is amplified by alpha_par,
/// the second by alpha_perp (or per pixel from the map).
/// Throws std::invalid_argument unless spec.orientations == 2.
std::vector<Frame> phase_mag_axial(const std::vector<Frame>& frames, const PyramidSpec& spec,
                                   const MagnificationSpec& mspec, const std::optional<TemporalFilterSpec>& tf);

}  // namespace axmag
