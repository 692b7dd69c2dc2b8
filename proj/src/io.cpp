#include "patchseg/io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "patchseg/errors.hpp"

namespace patchseg {

namespace {

using json = nlohmann::json;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError("cannot open '" + path.string() + "'");
  return f;
}

[[noreturn]] void png_failure(png_structp, png_const_charp msg) {
  throw DataError(std::string("png: ") + (msg ? msg : "unknown error"));
}

void png_quiet(png_structp, png_const_charp) {}

void write_gray_png(const std::filesystem::path& path, const std::vector<std::uint32_t>& pixels,
                    int height, int width) {
  std::uint32_t max_value = 0;
  for (std::uint32_t v : pixels) max_value = std::max(max_value, v);
  if (max_value > 65535) {
    throw DataError("value " + std::to_string(max_value) + " does not fit a 16-bit PNG");
  }
  const int bit_depth = max_value > 255 ? 16 : 8;

  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_failure, png_quiet);
  if (!png) throw DataError("png writer allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("png writer allocation failed");
  }
  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::size_t stride = static_cast<std::size_t>(width) * (bit_depth / 8);
    std::vector<png_byte> row(stride);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const std::uint32_t v = pixels[static_cast<std::size_t>(r) * width + c];
        if (bit_depth == 8) {
          row[c] = static_cast<png_byte>(v);
        } else {
          row[2 * c] = static_cast<png_byte>(v >> 8);
          row[2 * c + 1] = static_cast<png_byte>(v & 0xff);
        }
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

struct GrayImage {
  int height = 0;
  int width = 0;
  int bit_depth = 8;
  std::vector<std::uint32_t> pixels;
};

GrayImage read_gray_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw DataError("'" + path.string() + "' is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_failure, png_quiet);
  if (!png) throw DataError("png reader allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("png reader allocation failed");
  }
  GrayImage out;
  try {
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    if (color_type != PNG_COLOR_TYPE_GRAY) {
      throw DataError("'" + path.string() + "' is not single-channel grayscale");
    }
    out.bit_depth = png_get_bit_depth(png, info);
    if (out.bit_depth < 8) {
      png_set_expand_gray_1_2_4_to_8(png);
      out.bit_depth = 8;
    }
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.width = static_cast<int>(png_get_image_width(png, info));
    if (out.height <= 0 || out.width <= 0) throw DataError("'" + path.string() + "' is empty");

    png_read_update_info(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    std::vector<png_byte> row(stride);
    out.pixels.resize(static_cast<std::size_t>(out.height) * out.width);
    for (int r = 0; r < out.height; ++r) {
      png_read_row(png, row.data(), nullptr);
      for (int c = 0; c < out.width; ++c) {
        const std::uint32_t v = out.bit_depth == 8
                                    ? row[c]
                                    : (static_cast<std::uint32_t>(row[2 * c]) << 8) | row[2 * c + 1];
        out.pixels[static_cast<std::size_t>(r) * out.width + c] = v;
      }
    }
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("'" + path.string() + "' is not valid JSON");
  return j;
}

}  // namespace

void write_id_png(const std::filesystem::path& path, const Grid<std::uint32_t>& grid) {
  write_gray_png(path, grid.data(), grid.height(), grid.width());
}

void write_mask_png(const std::filesystem::path& path, const SemanticMask& mask) {
  std::vector<std::uint32_t> pixels(mask.data().begin(), mask.data().end());
  write_gray_png(path, pixels, mask.height(), mask.width());
}

Grid<std::uint32_t> read_id_png(const std::filesystem::path& path) {
  GrayImage img = read_gray_png(path);
  Grid<std::uint32_t> grid(img.height, img.width);
  grid.data() = std::move(img.pixels);
  return grid;
}

SemanticMask read_mask_png(const std::filesystem::path& path) {
  GrayImage img = read_gray_png(path);
  SemanticMask mask(img.height, img.width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    mask.data()[i] = static_cast<ClassId>(img.pixels[i]);
  }
  return mask;
}

void write_boundary_png(const std::filesystem::path& path, const BoundaryMap& map) {
  std::vector<std::uint32_t> pixels(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const float v = std::min(1.0f, std::max(0.0f, map.data()[i]));
    pixels[i] = static_cast<std::uint32_t>(std::lround(v * 255.0f));
  }
  write_gray_png(path, pixels, map.height(), map.width());
}

void write_boundary_pfm(const std::filesystem::path& path, const BoundaryMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "'");
  // "-1.0" declares little-endian sample order.
  out << "Pf\n" << map.width() << " " << map.height() << "\n-1.0\n";
  for (int r = map.height() - 1; r >= 0; --r) {
    out.write(reinterpret_cast<const char*>(&map.data()[static_cast<std::size_t>(r) * map.width()]),
              static_cast<std::streamsize>(sizeof(float)) * map.width());
  }
  if (!out) throw DataError("short write to '" + path.string() + "'");
}

namespace {

BoundaryMap read_boundary_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0;
  in >> magic >> width >> height >> scale;
  if (magic != "Pf" || width <= 0 || height <= 0 || scale >= 0) {
    throw DataError("'" + path.string() + "' is not a little-endian grayscale PFM");
  }
  in.get();  // single whitespace byte after the header
  BoundaryMap map(height, width);
  for (int r = height - 1; r >= 0; --r) {
    in.read(reinterpret_cast<char*>(&map.data()[static_cast<std::size_t>(r) * width]),
            static_cast<std::streamsize>(sizeof(float)) * width);
  }
  if (!in) throw DataError("short read from '" + path.string() + "'");
  return map;
}

}  // namespace

BoundaryMap read_boundary(const std::filesystem::path& path) {
  if (path.extension() == ".pfm") return read_boundary_pfm(path);
  GrayImage img = read_gray_png(path);
  const float denom = img.bit_depth == 8 ? 255.0f : 65535.0f;
  BoundaryMap map(img.height, img.width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    map.data()[i] = static_cast<float>(img.pixels[i]) / denom;
  }
  return map;
}

void write_class_map(const std::filesystem::path& path, const ClassMap& cm) {
  json classes = json::array();
  for (const auto& e : cm.entries()) {
    classes.push_back({{"label", e.label}, {"id", e.id}});
  }
  json j{{"classes", std::move(classes)}, {"background_id", cm.background_id()}};
  write_text_file(path, j.dump(2) + "\n");
}

ClassMap read_class_map(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  try {
    std::vector<ClassMap::Entry> entries;
    for (const auto& item : j.at("classes")) {
      entries.push_back({item.at("label").get<std::string>(),
                         static_cast<ClassId>(item.at("id").get<unsigned>())});
    }
    const ClassId background = static_cast<ClassId>(j.value("background_id", 0u));
    return ClassMap(std::move(entries), background);
  } catch (const json::exception& e) {
    throw DataError("'" + path.string() + "': " + e.what());
  }
}

void write_instance_table(const std::filesystem::path& path,
                          const std::map<InstanceId, ClassId>& classes) {
  json j = json::object();
  for (const auto& [id, class_id] : classes) j[std::to_string(id)] = class_id;
  write_text_file(path, j.dump(2) + "\n");
}

std::map<InstanceId, ClassId> read_instance_table(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  if (!j.is_object()) throw DataError("'" + path.string() + "' must hold a JSON object");
  std::map<InstanceId, ClassId> classes;
  for (const auto& [key, value] : j.items()) {
    try {
      classes[static_cast<InstanceId>(std::stoul(key))] =
          static_cast<ClassId>(value.get<unsigned>());
    } catch (const std::exception&) {
      throw DataError("'" + path.string() + "': bad instance entry '" + key + "'");
    }
  }
  return classes;
}

void write_instance_map(const std::filesystem::path& png_path,
                        const std::filesystem::path& table_path, const InstanceMap& im) {
  write_id_png(png_path, im.ids);
  write_instance_table(table_path, im.classes);
}

InstanceMap read_instance_map(const std::filesystem::path& png_path,
                              const std::filesystem::path& table_path) {
  InstanceMap im;
  im.ids = read_id_png(png_path);
  im.classes = read_instance_table(table_path);
  return im;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("short write to '" + path.string() + "'");
}

}  // namespace patchseg
