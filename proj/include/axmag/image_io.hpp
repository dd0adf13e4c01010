#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "axmag/frame.hpp"

namespace axmag {

/// Dense float32 array with row-major payload, the in-memory form of an
/// AXTF file.
struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t element_count() const;
};

// AXTF layout: "AXTF", version 0x01, dtype 0x01 (f32 LE), rank byte,
// rank x u32 LE dims, row-major payload.
inline constexpr std::uint8_t kAxtfVersion = 0x01;
inline constexpr std::uint8_t kAxtfFloat32 = 0x01;

void write_axtf(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_axtf(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_axtf(const Tensor& tensor);
Tensor decode_axtf(const std::vector<std::uint8_t>& bytes);

/// Loads an 8/16-bit PNG (gray or RGB; alpha is dropped) or an AXTF tensor
/// of rank 2 (H,W) or 3 (H,W,C). Values are scaled to [0,1].
Frame load_frame(const std::filesystem::path& path);

/// Writes an 8-bit PNG. Values are clamped to [0,1] and rounded.
void save_png(const std::filesystem::path& path, const Frame& frame);

/// Frame as a rank-3 (H,W,C) tensor and back.
Tensor frame_to_tensor(const Frame& frame);
Frame tensor_to_frame(const Tensor& tensor);

/// Sorted list of *.png files in a directory (numbered frame sequences).
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);
std::vector<Frame> load_sequence(const std::filesystem::path& dir);
/// Writes frames as 000000.png, 000001.png, ...
void save_sequence(const std::filesystem::path& dir, const std::vector<Frame>& frames);

}  // namespace axmag
