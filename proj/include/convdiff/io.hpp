#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "convdiff/image.hpp"
#include "convdiff/kernel.hpp"

namespace convdiff {

// ---- Netpbm images ---------------------------------------------------------

/// Reads binary PGM (P5, one channel) or PPM (P6, three channels) with maxval
/// 255 or 65535, mapped linearly to [0,1].
Image read_image(const std::filesystem::path& path);
Image decode_netpbm(std::span<const std::uint8_t> bytes);

/// Writes P5/P6 depending on channel count. Samples are clamped to [0,1] and
/// rounded to the nearest level.
void write_image(const std::filesystem::path& path, const Image& img, std::uint32_t maxval = 255);
std::vector<std::uint8_t> encode_netpbm(const Image& img, std::uint32_t maxval = 255);

// ---- Tensor files ----------------------------------------------------------
//
// Byte layout, all little-endian:
//   "CONVDIF1" | ndim:u32 | dims:u32[ndim] | payload:f32[prod(dims)]
// Payload is row-major. Images are stored as [channels, height, width].

inline constexpr char kTensorMagic[8] = {'C', 'O', 'N', 'V', 'D', 'I', 'F', '1'};

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);
Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const Tensor& t);

Tensor image_to_tensor(const Image& img);
/// Accepts [C,H,W] with C in {1,3}, or [H,W].
Image tensor_to_image(const Tensor& t);
/// Zero-dimensional tensor holding one value.
Tensor scalar_tensor(float value);

// ---- Kernel files ----------------------------------------------------------
//
//   <size> <sigma_hint>
//   <size lines of size space-separated taps>
// sigma_hint is "nan" for estimated kernels.

struct KernelFile {
  Kernel kernel;
  double sigma_hint;
};

KernelFile read_kernel_file(const std::filesystem::path& path);
KernelFile parse_kernel_file(const std::string& text);
void write_kernel_file(const std::filesystem::path& path, const Kernel& k, double sigma_hint);
std::string format_kernel_file(const Kernel& k, double sigma_hint);

// ---- Config ----------------------------------------------------------------

/// Line-oriented key=value; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> parse_config(const std::string& text);
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace convdiff
