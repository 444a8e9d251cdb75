#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "seamgrid/field.hpp"
#include "seamgrid/render.hpp"

namespace seamgrid {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Field files ("SNRF", version 1): magic, u32 version, u32 sh_degree,
// 3x u32 density resolution, 3x u32 color resolution, 6x f64 aabb
// (min, max), then density values and SH coefficients as little-endian
// f32 arrays in x-fastest node order (per node: 3 channels x basis).
void save_field(const RadianceField& field, const std::filesystem::path& path);
RadianceField load_field(const std::filesystem::path& path);

// Delta checkpoints ("SNRD") reuse the field layout: the coefficient
// array carries the delta and the density array is written as zeros.
void save_delta(std::span<const double> delta, const RadianceField& target,
                const std::filesystem::path& path);
std::vector<double> load_delta(const std::filesystem::path& path, const RadianceField& target);

// binary PPM, P6 maxval 255, bytes = round(255 * clamp(c, 0, 1))
void save_ppm(const ImageBuffer& img, const std::filesystem::path& path);

// raw image dump ("SNRI"): magic, u32 version, u32 width, u32 height,
// f32 rgb row-major; exact round-trip for pixel comparisons
void save_raw(const ImageBuffer& img, const std::filesystem::path& path);
ImageBuffer load_raw(const std::filesystem::path& path);

}  // namespace seamgrid
