#pragma once

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nbaitv/image.hpp"

namespace nbaitv {

enum class ImageFormat { pgm8, pgm16, png8 };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string_view to_string(ImageFormat format) noexcept {
  switch (format) {
    case ImageFormat::pgm8: return "pgm8";
    case ImageFormat::pgm16: return "pgm16";
    case ImageFormat::png8: return "png8";
  }
  return "unknown";
}

inline ImageFormat parse_image_format(std::string_view name) {
  if (name == "pgm8" || name == "pgm") return ImageFormat::pgm8;
  if (name == "pgm16") return ImageFormat::pgm16;
  if (name == "png8" || name == "png") return ImageFormat::png8;
  throw std::invalid_argument("unknown image format '" + std::string(name) + "'");
}

/// Guess the format from the file extension (.png -> png8, anything else -> pgm8).
inline ImageFormat format_from_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" ? ImageFormat::png8 : ImageFormat::pgm8;
}

inline unsigned max_sample(ImageFormat format) noexcept {
  return format == ImageFormat::pgm16 ? 65535u : 255u;
}

namespace detail {

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct PgmHeader {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 0;
  std::size_t data_offset = 0;
};

inline PgmHeader parse_pgm_header(const std::vector<unsigned char>& bytes, const std::string& name) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw IoError("'" + name + "' is not a binary PGM (P5) file");
  }
  std::size_t pos = 2;
  auto next_number = [&]() -> std::size_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw IoError("malformed PGM header in '" + name + "'");
    }
    std::size_t value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (value > (1u << 30)) throw IoError("malformed PGM header in '" + name + "'");
      ++pos;
    }
    return value;
  };
  PgmHeader header;
  header.width = next_number();
  header.height = next_number();
  const std::size_t maxval = next_number();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw IoError("malformed PGM header in '" + name + "'");
  }
  ++pos;  // exactly one whitespace byte precedes the raster
  if (header.width == 0 || header.height == 0) throw IoError("PGM '" + name + "' has zero size");
  if (maxval == 0 || maxval > 65535) {
    throw IoError("unsupported PGM bit depth (maxval " + std::to_string(maxval) + ") in '" + name + "'");
  }
  header.maxval = static_cast<unsigned>(maxval);
  header.data_offset = pos;
  return header;
}

inline ImageGrid load_pgm(const std::filesystem::path& path, int required_bytes_per_sample) {
  const auto bytes = read_bytes(path);
  const auto header = parse_pgm_header(bytes, path.string());
  const int bytes_per_sample = header.maxval > 255 ? 2 : 1;
  if (required_bytes_per_sample != 0 && bytes_per_sample != required_bytes_per_sample) {
    throw IoError("unsupported bit depth: '" + path.string() + "' has maxval " +
                  std::to_string(header.maxval));
  }
  const std::size_t n = header.width * header.height;
  if (bytes.size() - header.data_offset < n * static_cast<std::size_t>(bytes_per_sample)) {
    throw IoError("truncated PGM raster in '" + path.string() + "'");
  }
  ImageGrid grid(header.height, header.width);
  const unsigned char* raster = bytes.data() + header.data_offset;
  for (std::size_t k = 0; k < n; ++k) {
    unsigned sample = bytes_per_sample == 2
                          ? (static_cast<unsigned>(raster[2 * k]) << 8) | raster[2 * k + 1]
                          : raster[k];
    grid[k] = static_cast<double>(sample);
  }
  return grid;
}

inline ImageGrid load_png8(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  if (image.format != PNG_FORMAT_GRAY) {
    png_image_free(&image);
    throw IoError("unsupported PNG layout in '" + path.string() +
                  "': only 8-bit grayscale without alpha is accepted");
  }
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  ImageGrid grid(image.height, image.width);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = static_cast<double>(buffer[k]);
  return grid;
}

inline unsigned quantize(double value, double peak, unsigned maxval) noexcept {
  const double clamped = std::clamp(value, 0.0, peak);
  return static_cast<unsigned>(std::lround(clamped / peak * maxval));
}

}  // namespace detail

/// Load an image; sample values map one-to-one onto intensities in [0, maxval].
inline ImageGrid load_image(const std::filesystem::path& path, ImageFormat format) {
  switch (format) {
    case ImageFormat::pgm8: return detail::load_pgm(path, 1);
    case ImageFormat::pgm16: return detail::load_pgm(path, 2);
    case ImageFormat::png8: return detail::load_png8(path);
  }
  throw std::invalid_argument("load_image: unknown format");
}

/// Load by extension; PGM files of either bit depth are accepted.
inline ImageGrid load_image(const std::filesystem::path& path) {
  return format_from_extension(path) == ImageFormat::png8 ? detail::load_png8(path)
                                                          : detail::load_pgm(path, 0);
}

/// Clamp to [0, peak] and quantize linearly onto the format's sample range.
inline void save_image(const ImageGrid& grid, const std::filesystem::path& path, ImageFormat format,
                       double peak = 255.0) {
  if (!(peak > 0.0)) throw std::invalid_argument("save_image: peak must be positive");
  const unsigned maxval = max_sample(format);

  if (format == ImageFormat::png8) {
    std::vector<png_byte> buffer(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      buffer[k] = static_cast<png_byte>(detail::quantize(grid[k], peak, maxval));
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(grid.width());
    image.height = static_cast<png_uint_32>(grid.height());
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
      throw IoError("cannot write PNG '" + path.string() + "': " + image.message);
    }
    return;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << grid.width() << ' ' << grid.height() << '\n' << maxval << '\n';
  std::vector<char> raster;
  raster.reserve(grid.size() * (maxval > 255 ? 2 : 1));
  for (double v : grid) {
    const unsigned s = detail::quantize(v, peak, maxval);
    if (maxval > 255) raster.push_back(static_cast<char>((s >> 8) & 0xff));
    raster.push_back(static_cast<char>(s & 0xff));
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Lossless text matrix: "height width" then one line of space-separated counts per row.
inline void save_counts(const CountGrid& counts, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << counts.height() << ' ' << counts.width() << '\n';
  for (std::size_t i = 0; i < counts.height(); ++i) {
    for (std::size_t j = 0; j < counts.width(); ++j) {
      if (j) out << ' ';
      out << counts(i, j);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline CountGrid load_counts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  const std::string name = path.string();

  auto parse_int = [&](std::string_view token, std::size_t line_no) -> std::int64_t {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw IoError(name + ":" + std::to_string(line_no) + ": invalid integer '" +
                    std::string(token) + "'");
    }
    return value;
  };
  auto tokens_of = [](const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream ss(line);
    for (std::string t; ss >> t;) tokens.push_back(std::move(t));
    return tokens;
  };

  std::string line;
  if (!std::getline(in, line)) throw IoError("empty count file '" + name + "'");
  const auto header = tokens_of(line);
  if (header.size() != 2) throw IoError(name + ":1: expected 'height width'");
  const auto height = parse_int(header[0], 1);
  const auto width = parse_int(header[1], 1);
  if (height <= 0 || width <= 0) throw IoError(name + ":1: dimensions must be positive");

  CountGrid counts(static_cast<std::size_t>(height), static_cast<std::size_t>(width));
  for (std::size_t i = 0; i < counts.height(); ++i) {
    if (!std::getline(in, line)) {
      throw IoError(name + ": expected " + std::to_string(height) + " rows, found " +
                    std::to_string(i));
    }
    const auto row = tokens_of(line);
    if (row.size() != counts.width()) {
      throw IoError(name + ":" + std::to_string(i + 2) + ": row has " + std::to_string(row.size()) +
                    " entries, expected " + std::to_string(width));
    }
    for (std::size_t j = 0; j < counts.width(); ++j) {
      const auto value = parse_int(row[j], i + 2);
      if (value < 0) {
        throw IoError(name + ":" + std::to_string(i + 2) + ": negative count " + row[j]);
      }
      counts(i, j) = value;
    }
  }
  while (std::getline(in, line)) {
    if (!tokens_of(line).empty()) throw IoError(name + ": trailing data after last row");
  }
  return counts;
}

}  // namespace nbaitv
