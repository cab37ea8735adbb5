#include "damseg/synthetic_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "damseg/errors.hpp"
#include "damseg/rng.hpp"

namespace damseg::seg {

namespace {

struct Ellipse {
    double cx, cy;      // centre
    double across;      // semi-axis perpendicular to the long axis
    double along;       // semi-axis along the long axis
    double cos_t, sin_t;

    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double u = dx * cos_t + dy * sin_t;    // across
        const double v = -dx * sin_t + dy * cos_t;   // along
        return (u * u) / (across * across) + (v * v) / (along * along) <= 1.0;
    }
};

constexpr double kIntensity[kSyntheticClasses] = {0.35, 0.08, 0.85, 0.15};

}  // namespace

std::vector<bool> boundary_pixels(const std::vector<int>& mask, std::size_t height, std::size_t width) {
    std::vector<bool> edge(mask.size(), false);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const int c = mask[y * width + x];
            const bool differs = (x > 0 && mask[y * width + x - 1] != c) ||
                                 (x + 1 < width && mask[y * width + x + 1] != c) ||
                                 (y > 0 && mask[(y - 1) * width + x] != c) ||
                                 (y + 1 < height && mask[(y + 1) * width + x] != c);
            edge[y * width + x] = differs;
        }
    }
    return edge;
}

SyntheticSample generate_sample(std::size_t image_size, double occlusion_level, std::uint64_t seed) {
    if (image_size < 8) throw ParameterError("generate_sample: image_size must be >= 8");
    if (!(occlusion_level >= 0.0 && occlusion_level <= 1.0)) {
        throw ParameterError("generate_sample: occlusion level must lie in [0, 1]");
    }
    Rng rng(seed);
    const double s = static_cast<double>(image_size);

    // Long axis points down the image, tilted by up to 25 degrees.
    const double tilt = rng.uniform(-0.44, 0.44);
    const double cos_t = std::cos(tilt), sin_t = std::sin(tilt);
    const double cx = s * rng.uniform(0.42, 0.58);
    const double cy = s * rng.uniform(0.34, 0.42);

    const Ellipse inner{cx, cy, s * rng.uniform(0.12, 0.16), s * rng.uniform(0.18, 0.24), cos_t, sin_t};
    const double wall = s * rng.uniform(0.05, 0.07);
    const Ellipse outer{cx, cy, inner.across + wall, inner.along + wall, cos_t, sin_t};
    const double side_along = s * rng.uniform(0.08, 0.11);
    const double offset = outer.along + side_along * 0.8;
    // unit vector along the long axis is (-sin_t, cos_t)
    const Ellipse side{cx - offset * sin_t, cy + offset * cos_t, s * rng.uniform(0.11, 0.15), side_along,
                       cos_t, sin_t};

    SyntheticSample sample;
    sample.height = sample.width = image_size;
    sample.occlusion_level = occlusion_level;
    sample.seed = seed;
    sample.mask.assign(image_size * image_size, kBackground);
    sample.image.assign(image_size * image_size, 0.0);

    for (std::size_t y = 0; y < image_size; ++y) {
        for (std::size_t x = 0; x < image_size; ++x) {
            const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
            int label = kBackground;
            if (inner.contains(px, py)) {
                label = kInnerChamber;
            } else if (outer.contains(px, py)) {
                label = kOuterWall;
            } else if (side.contains(px, py)) {
                label = kSideChamber;
            }
            sample.mask[y * image_size + x] = label;
        }
    }
    for (std::size_t i = 0; i < sample.image.size(); ++i) {
        const double speckle = 1.0 + 0.25 * rng.normal();
        sample.image[i] = std::clamp(kIntensity[sample.mask[i]] * speckle, kVisibleFloor, 1.0);
    }

    // Cone-shaped dropout anchored at the structure centre.
    const auto edge = boundary_pixels(sample.mask, image_size, image_size);
    std::vector<std::pair<double, std::size_t>> by_angle;
    for (std::size_t i = 0; i < edge.size(); ++i) {
        if (!edge[i]) continue;
        const double px = static_cast<double>(i % image_size) + 0.5;
        const double py = static_cast<double>(i / image_size) + 0.5;
        by_angle.emplace_back(std::atan2(py - cy, px - cx), i);
    }
    std::sort(by_angle.begin(), by_angle.end());
    const std::size_t nb = by_angle.size();
    const auto k = static_cast<std::size_t>(std::lround(occlusion_level * static_cast<double>(nb)));
    const std::size_t start = nb ? rng.index(nb) : 0;
    if (k == 0 || nb == 0) return sample;

    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double lo = by_angle[start].first;
    double span = by_angle[(start + k - 1) % nb].first - lo;
    if (span < 0.0 || (k == nb)) span = k == nb ? two_pi : span + two_pi;
    for (std::size_t i = 0; i < sample.image.size(); ++i) {
        const double px = static_cast<double>(i % image_size) + 0.5;
        const double py = static_cast<double>(i / image_size) + 0.5;
        double rel = std::atan2(py - cy, px - cx) - lo;
        while (rel < 0.0) rel += two_pi;
        if (rel <= span) sample.image[i] = 0.0;
    }
    return sample;
}

std::vector<SyntheticSample> generate_dataset(std::size_t n, double occlusion_level, std::uint64_t seed,
                                              std::size_t image_size) {
    if (n == 0) throw ParameterError("generate_dataset: n must be >= 1");
    std::vector<SyntheticSample> samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        samples.push_back(generate_sample(image_size, occlusion_level, split_seed(seed, i)));
    }
    return samples;
}

}  // namespace damseg::seg
