#pragma once

#include <algorithm>
#include <string>

#include "i2c/errors.hpp"

namespace i2c {

// Axis-aligned box over pixel indices, half-open: [x1,x2) x [y1,y2).
struct BBox {
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    long long area() const {
        return static_cast<long long>(x2 - x1) * static_cast<long long>(y2 - y1);
    }

    bool operator==(const BBox&) const = default;

    void validate() const {
        if (x1 >= x2 || y1 >= y2)
            throw InputError("degenerate box (" + std::to_string(x1) + "," + std::to_string(y1) +
                             "," + std::to_string(x2) + "," + std::to_string(y2) + ")");
    }
};

// Intersection over union under the half-open pixel-area convention.
inline double iou(const BBox& a, const BBox& b) {
    a.validate();
    b.validate();
    const int ix1 = std::max(a.x1, b.x1);
    const int iy1 = std::max(a.y1, b.y1);
    const int ix2 = std::min(a.x2, b.x2);
    const int iy2 = std::min(a.y2, b.y2);
    const long long inter = (ix1 < ix2 && iy1 < iy2)
                                ? static_cast<long long>(ix2 - ix1) * (iy2 - iy1)
                                : 0ll;
    const long long uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace i2c
