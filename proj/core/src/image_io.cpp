#include "lumi/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "lumi/errors.hpp"

namespace lumi {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_suffix(const std::string& s, const char* suffix) {
  const std::size_t n = std::strlen(suffix);
  return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

Image load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw IoError(path + " is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng failed while reading " + path);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": alpha channels are not supported");
  }
  if (bit_depth == 16) png_set_swap(png);  // stored big-endian
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": unsupported channel count " + std::to_string(channels));
  }
  if (depth != 8 && depth != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": unsupported bit depth " + std::to_string(depth));
  }

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  std::vector<png_byte> raster(row_bytes * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = raster.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(w, h, channels);
  if (depth == 8) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < channels; ++c)
          img.at(x, y, c) = raster[row_bytes * y + std::size_t(x) * channels + c] / 255.0f;
  } else {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < channels; ++c) {
          std::uint16_t v;
          std::memcpy(&v, raster.data() + row_bytes * y + (std::size_t(x) * channels + c) * 2, 2);
          img.at(x, y, c) = v / 65535.0f;
        }
  }
  return img;
}

Image load_pfm(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);

  char tag[3] = {};
  if (std::fscanf(fp.get(), "%2s", tag) != 1) throw IoError(path + ": bad PFM header");
  int channels;
  if (std::strcmp(tag, "PF") == 0)
    channels = 3;
  else if (std::strcmp(tag, "Pf") == 0)
    channels = 1;
  else
    throw IoError(path + ": not a PFM file");

  int w = 0, h = 0;
  double scale = 0.0;
  if (std::fscanf(fp.get(), "%d %d %lf", &w, &h, &scale) != 3 || w <= 0 || h <= 0)
    throw IoError(path + ": bad PFM dimensions");
  if (scale >= 0) throw IoError(path + ": big-endian PFM is not supported");
  std::fgetc(fp.get());  // single whitespace after the scale line

  Image img(w, h, channels);
  std::vector<float> row(std::size_t(w) * channels);
  // PFM scanlines run bottom-to-top.
  for (int y = h - 1; y >= 0; --y) {
    if (std::fread(row.data(), sizeof(float), row.size(), fp.get()) != row.size())
      throw IoError(path + ": truncated PFM payload");
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) img.at(x, y, c) = row[std::size_t(x) * channels + c];
  }
  return img;
}

}  // namespace

Image load_image(const std::string& path) {
  if (has_suffix(path, ".pfm") || has_suffix(path, ".PFM")) return load_pfm(path);
  return load_png(path);
}

void save_png(const Image& img, const std::string& path) {
  if (!img.all_finite()) throw NumericsError("save_png: non-finite pixels in " + path);
  if (img.channels != 1 && img.channels != 3)
    throw DataError("save_png: channel count must be 1 or 3");

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed while writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(std::size_t(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const float v = std::clamp(img.at(x, y, c), 0.0f, 1.0f);
        row[std::size_t(x) * img.channels + c] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void save_pfm(const Image& img, const std::string& path) {
  if (!img.all_finite()) throw NumericsError("save_pfm: non-finite pixels in " + path);
  if (img.channels != 1 && img.channels != 3)
    throw DataError("save_pfm: channel count must be 1 or 3");

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path);
  std::fprintf(fp.get(), "%s\n%d %d\n-1.0\n", img.channels == 3 ? "PF" : "Pf", img.width,
               img.height);
  std::vector<float> row(std::size_t(img.width) * img.channels);
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) row[std::size_t(x) * img.channels + c] = img.at(x, y, c);
    if (std::fwrite(row.data(), sizeof(float), row.size(), fp.get()) != row.size())
      throw IoError("short write to " + path);
  }
}

void save_image(const Image& img, const std::string& path) {
  if (has_suffix(path, ".pfm") || has_suffix(path, ".PFM"))
    save_pfm(img, path);
  else if (has_suffix(path, ".png") || has_suffix(path, ".PNG"))
    save_png(img, path);
  else
    throw IoError("save_image: unknown extension in " + path);
}

}  // namespace lumi
