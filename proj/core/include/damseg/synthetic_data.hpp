#pragma once

// Synthetic stand-in for partially occluded cardiac ultrasound: an inner
// chamber, the wall around it and a side chamber, rendered with
// multiplicative speckle and a cone-shaped dropout wedge.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace damseg::seg {

inline constexpr int kBackground = 0;
inline constexpr int kInnerChamber = 1;
inline constexpr int kOuterWall = 2;
inline constexpr int kSideChamber = 3;
inline constexpr int kSyntheticClasses = 4;

/// Lowest intensity of a visible pixel; only occluded pixels are exactly 0.
inline constexpr double kVisibleFloor = 0.02;

struct SyntheticSample {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> image;  // row-major, values in [0, 1]
    std::vector<int> mask;      // row-major class labels, complete under occlusion
    double occlusion_level = 0.0;
    std::uint64_t seed = 0;
};

/// Pixels whose label differs from one of their 4-neighbours.
std::vector<bool> boundary_pixels(const std::vector<int>& mask, std::size_t height, std::size_t width);

/// Renders one sample. The occluder is an angular wedge about the structure
/// centre that covers round(occlusion_level * #boundary pixels) boundary
/// pixels and zeroes every pixel inside it.
SyntheticSample generate_sample(std::size_t image_size, double occlusion_level, std::uint64_t seed);

/// Sample i uses seed split_seed(seed, i). Throws ParameterError for n == 0 or
/// an occlusion level outside [0, 1].
std::vector<SyntheticSample> generate_dataset(std::size_t n, double occlusion_level, std::uint64_t seed,
                                              std::size_t image_size = 32);

}  // namespace damseg::seg
