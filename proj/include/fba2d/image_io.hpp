#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fba2d/tensor.hpp"

namespace fba2d {

/// 8-bit PNG (gray or RGB) bytes for img, quantized with quantize8's rule.
std::string encode_png(const ImageTensor &img);
/// Decodes gray/RGB (alpha dropped, 16-bit reduced) PNG bytes to [0,1] values k/255.
ImageTensor decode_png(std::string_view bytes);

void write_png(const std::filesystem::path &path, const ImageTensor &img);
ImageTensor read_png(const std::filesystem::path &path);

/// Standard alphabet, padded.
std::string base64_encode(std::string_view bytes);
/// Throws std::invalid_argument on malformed input.
std::string base64_decode(std::string_view text);

} // namespace fba2d
