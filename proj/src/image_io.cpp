#include "fba2d/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <stdexcept>
#include <vector>

#include <openssl/evp.h>
#include <png.h>

namespace fba2d {

namespace {

struct PngImage {
  png_image image{};
  PngImage() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage &) = delete;
  PngImage &operator=(const PngImage &) = delete;
};

std::uint8_t to_byte(double v) {
  const double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(q);
}

} // namespace

std::string encode_png(const ImageTensor &img) {
  validate_shape(img.shape());
  const std::size_t h = img.height(), w = img.width(), ch = img.channels();
  std::vector<std::uint8_t> interleaved(h * w * ch);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t c = 0; c < ch; ++c)
        interleaved[(i * w + j) * ch + c] = to_byte(img.at(c, i, j));

  PngImage p;
  p.image.width = static_cast<png_uint_32>(w);
  p.image.height = static_cast<png_uint_32>(h);
  p.image.format = ch == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&p.image, nullptr, &size, 0, interleaved.data(), 0, nullptr))
    throw std::runtime_error(std::string("png size query failed: ") + p.image.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&p.image, out.data(), &size, 0, interleaved.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode failed: ") + p.image.message);
  out.resize(size);
  return out;
}

ImageTensor decode_png(std::string_view bytes) {
  PngImage p;
  if (!png_image_begin_read_from_memory(&p.image, bytes.data(), bytes.size()))
    throw std::invalid_argument(std::string("png decode failed: ") + p.image.message);
  const bool color = (p.image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  p.image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t ch = color ? 3 : 1;
  const std::size_t h = p.image.height, w = p.image.width;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(p.image));
  if (!png_image_finish_read(&p.image, nullptr, buf.data(), 0, nullptr))
    throw std::invalid_argument(std::string("png decode failed: ") + p.image.message);
  ImageTensor img(Shape{h, w, ch});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t c = 0; c < ch; ++c)
        img.at(c, i, j) = buf[(i * w + j) * ch + c] / 255.0;
  return img;
}

void write_png(const std::filesystem::path &path, const ImageTensor &img) {
  const std::string bytes = encode_png(img);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

ImageTensor read_png(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char *>(out.data()),
                                reinterpret_cast<const unsigned char *>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64 length is not a multiple of 4");
  std::string out(3 * (text.size() / 4), '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char *>(out.data()),
                                reinterpret_cast<const unsigned char *>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("malformed base64");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

} // namespace fba2d
