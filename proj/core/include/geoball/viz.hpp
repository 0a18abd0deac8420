#pragma once

#include "geoball/nball.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace geoball {

/// Affine map R^n -> R^2: p = (axis0 . (x - mean), axis1 . (x - mean)).
struct Projection2d {
    Vec mean;
    std::array<Vec, 2> axes;

    std::array<double, 2> apply(std::span<const double> x) const;
};

/// Top-2 principal components of the given centres. A 2D space maps through the
/// identity; identical centres fall back to the first two unit axes.
Projection2d principal_projection(const BallSpace& space, std::span<const std::string> selected);

struct LabeledPoint {
    std::string label;
    Vec h;
};

/// SVG with one circle per selected concept (centre projected, radius kept as is)
/// and an optional dot per point, coloured by its label.
std::string render_balls_2d(const BallSpace& space, std::span<const std::string> selected,
                            std::span<const LabeledPoint> points = {});

}  // namespace geoball
