#include "axmag/magnification.hpp"

#include <cmath>
#include <stdexcept>

namespace axmag {

void MagnificationSpec::validate(int rows, int cols) const {
    if (!std::isfinite(angle_deg)) throw std::invalid_argument("angle must be finite");
    if (!(alpha_par >= 0.0) || !(alpha_perp >= 0.0)) throw std::invalid_argument("magnification factors must be >= 0");
    if (per_pixel_map) {
        const Frame& m = *per_pixel_map;
        if (m.height() != rows || m.width() != cols || m.channels() != 2) {
            throw std::invalid_argument("magnification map must be H x W x 2 and match the frame");
        }
        for (float v : m.data())
            if (!(v >= 0.0f)) throw std::invalid_argument("magnification map values must be >= 0");
    }
}

}  // namespace axmag
