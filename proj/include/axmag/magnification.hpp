#pragma once

#include <optional>
#include <vector>

#include "axmag/frame.hpp"

namespace axmag {

/// Static mode measures motion against the first frame, dynamic mode
/// accumulates frame-to-frame changes.
enum class ReferenceMode { Static, Dynamic };

/// Axial magnification request: factor `alpha_par` along the direction at
/// `angle_deg` (measured from +x towards +y in image coordinates) and
/// `alpha_perp` along its orthogonal. Factors follow the (1 + alpha)
/// convention: zero leaves motion unchanged.
struct MagnificationSpec {
    double angle_deg = 0.0;
    double alpha_par = 0.0;
    double alpha_perp = 0.0;
    /// Optional per-pixel factors: H x W x 2 (channel 0 along the angle,
    /// channel 1 orthogonal). Overrides the scalar factors when present.
    std::optional<Frame> per_pixel_map;
    ReferenceMode mode = ReferenceMode::Static;

    /// Throws std::invalid_argument for negative factors or a malformed map.
    void validate(int rows, int cols) const;
};

}  // namespace axmag
