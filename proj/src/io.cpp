#include "forge/io.hpp"

#include <png.h>

#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

namespace forge {
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// NIfTI-1

constexpr std::size_t kNiftiHeaderSize = 348;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffMagic = 344;

constexpr std::int16_t kDtUInt8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

std::vector<char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T read_scalar(const char* bytes, bool swap) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), bytes, sizeof(T));
  if (swap) std::reverse(buf.begin(), buf.end());
  T value;
  std::memcpy(&value, buf.data(), sizeof(T));
  return value;
}

template <typename T>
void write_scalar(std::vector<char>& out, std::size_t offset, T value) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  std::memcpy(out.data() + offset, buf.data(), sizeof(T));
}

[[noreturn]] void header_error(const fs::path& path, std::size_t offset, const std::string& what) {
  throw Error("malformed NIfTI header in '" + path.string() + "' at byte " +
              std::to_string(offset) + ": " + what);
}

Volume3D load_nifti(const fs::path& path) {
  const std::vector<char> bytes = read_file(path);
  if (bytes.size() < kNiftiHeaderSize) header_error(path, bytes.size(), "file shorter than 348 bytes");

  bool swap = false;
  if (read_scalar<std::int32_t>(bytes.data(), false) != 348) {
    if (read_scalar<std::int32_t>(bytes.data(), true) != 348)
      header_error(path, 0, "sizeof_hdr is not 348");
    swap = true;
  }

  const std::string magic(bytes.data() + kOffMagic, 3);
  if (magic != "n+1" && magic != "ni1") header_error(path, kOffMagic, "bad magic '" + magic + "'");

  const auto ndim = read_scalar<std::int16_t>(bytes.data() + kOffDim, swap);
  if (ndim < 1 || ndim > 7) header_error(path, kOffDim, "dim[0] = " + std::to_string(ndim));
  if (ndim != 3)
    throw Error("unsupported dimensionality: '" + path.string() + "' has dim[0] = " +
                std::to_string(ndim) + ", expected 3");

  std::array<Eigen::Index, 3> dims{};
  for (int d = 0; d < 3; ++d) {
    const std::size_t off = kOffDim + 2 * static_cast<std::size_t>(d + 1);
    dims[d] = read_scalar<std::int16_t>(bytes.data() + off, swap);
    if (dims[d] < 1) header_error(path, off, "non-positive dim[" + std::to_string(d + 1) + "]");
  }

  const auto datatype = read_scalar<std::int16_t>(bytes.data() + kOffDatatype, swap);
  std::size_t elem = 0;
  switch (datatype) {
    case kDtUInt8: elem = 1; break;
    case kDtInt16: elem = 2; break;
    case kDtFloat32: elem = 4; break;
    default:
      throw Error("unsupported NIfTI datatype " + std::to_string(datatype) + " in '" +
                  path.string() + "' (byte " + std::to_string(kOffDatatype) + ")");
  }

  const auto vox_offset_f = read_scalar<float>(bytes.data() + kOffVoxOffset, swap);
  if (!(vox_offset_f >= 0.0f)) header_error(path, kOffVoxOffset, "negative vox_offset");
  auto vox_offset = static_cast<std::size_t>(vox_offset_f);

  std::vector<char> pair_data;
  const std::vector<char>* payload = &bytes;
  if (magic == "ni1") {
    fs::path img_path = path;
    img_path.replace_extension(".img");
    pair_data = read_file(img_path);
    payload = &pair_data;
  } else if (vox_offset < kNiftiHeaderSize) {
    header_error(path, kOffVoxOffset, "vox_offset inside header");
  }

  Volume3D vol(dims[0], dims[1], dims[2]);
  const std::size_t count = vol.data.size();
  if (payload->size() < vox_offset + count * elem)
    header_error(path, kOffVoxOffset, "voxel data truncated: need " + std::to_string(count * elem) +
                                          " bytes after offset " + std::to_string(vox_offset));

  // scl_slope == 0 means "no scaling".
  const auto slope = read_scalar<float>(bytes.data() + kOffSclSlope, swap);
  const auto inter = read_scalar<float>(bytes.data() + kOffSclSlope + 4, swap);
  const bool scaled = slope != 0.0f && std::isfinite(slope) && std::isfinite(inter) && !(slope == 1.0f && inter == 0.0f);

  const char* src = payload->data() + vox_offset;
  for (std::size_t i = 0; i < count; ++i) {
    const char* p = src + i * elem;
    switch (datatype) {
      case kDtUInt8: vol.data[i] = static_cast<unsigned char>(*p); break;
      case kDtInt16: vol.data[i] = read_scalar<std::int16_t>(p, swap); break;
      default: vol.data[i] = read_scalar<float>(p, swap); break;
    }
    if (scaled) vol.data[i] = slope * vol.data[i] + inter;
  }
  return vol;
}

// ---------------------------------------------------------------------------
// PGM

Image2D load_pgm(const fs::path& path) {
  const std::vector<char> bytes = read_file(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    long v = 0;
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos])))
      v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw Error("malformed PGM '" + path.string() + "' at byte " + std::to_string(pos));
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw Error("'" + path.string() + "' is not a P2/P5 PGM file");
  const bool ascii = bytes[1] == '2';
  pos = 2;
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535)
    throw Error("malformed PGM header in '" + path.string() + "'");

  Image2D img(h, w);
  if (ascii) {
    for (long i = 0; i < w * h; ++i) img.data()[i] = static_cast<double>(read_int()) / maxval;
    return img;
  }
  ++pos;  // single whitespace after maxval
  const std::size_t elem = maxval > 255 ? 2 : 1;
  if (bytes.size() < pos + static_cast<std::size_t>(w * h) * elem)
    throw Error("truncated PGM data in '" + path.string() + "'");
  for (long i = 0; i < w * h; ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos + i * elem);
    const unsigned v = elem == 2 ? (p[0] << 8) | p[1] : p[0];
    img.data()[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

// ---------------------------------------------------------------------------
// PNG

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image2D load_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw UsageError("cannot open '" + path.string() + "'");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng initialisation failed");
  }

  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  // Only plain values and heap storage reserved above are touched between
  // setjmp and a potential longjmp.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("unreadable PNG '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (color_type != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("'" + path.string() + "' is not a grayscale PNG");
  }
  if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  pixels.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = pixels.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const bool wide = bit_depth == 16;
  const double scale = wide ? 65535.0 : 255.0;
  Image2D img(height, width);
  for (png_uint_32 r = 0; r < height; ++r) {
    const png_byte* row = rows[r];
    for (png_uint_32 c = 0; c < width; ++c) {
      const unsigned v = wide ? (row[2 * c] << 8) | row[2 * c + 1] : row[c];
      img(r, c) = static_cast<double>(v) / scale;
    }
  }
  return img;
}

std::uint16_t to_u16(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

std::string lower_ext(const fs::path& p) {
  std::string ext = p.extension().string();
  for (char& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

}  // namespace

Image2D load_image(const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".pgm") return load_pgm(path);
  return load_png(path);
}

void save_image(const Image2D& img, const fs::path& path) {
  if (img.size() == 0) throw Error("cannot save an empty image");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error("cannot write '" + path.string() + "'");

  const auto width = static_cast<png_uint_32>(img.cols());
  const auto height = static_cast<png_uint_32>(img.rows());
  std::vector<png_byte> pixels(static_cast<std::size_t>(width) * height * 2);
  for (png_uint_32 r = 0; r < height; ++r) {
    for (png_uint_32 c = 0; c < width; ++c) {
      const std::uint16_t v = to_u16(img(r, c));
      const std::size_t i = (static_cast<std::size_t>(r) * width + c) * 2;
      pixels[i] = static_cast<png_byte>(v >> 8);
      pixels[i + 1] = static_cast<png_byte>(v & 0xff);
    }
  }
  std::vector<png_bytep> rows(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = pixels.data() + static_cast<std::size_t>(r) * width * 2;

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed writing PNG '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image2D quantize16(const Image2D& img) {
  return img.unaryExpr([](double v) { return static_cast<double>(to_u16(v)) / 65535.0; });
}

Volume3D load_volume(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("input path '" + path.string() + "' does not exist");
  if (!fs::is_directory(path)) return load_nifti(path);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    const std::string ext = lower_ext(entry.path());
    if (entry.is_regular_file() && (ext == ".png" || ext == ".pgm")) files.push_back(entry.path());
  }
  if (files.empty()) throw Error("no PNG/PGM slices in '" + path.string() + "'");
  std::sort(files.begin(), files.end());

  const Image2D first = load_image(files.front());
  Volume3D vol(first.cols(), first.rows(), static_cast<Eigen::Index>(files.size()));
  for (std::size_t k = 0; k < files.size(); ++k) {
    const Image2D slice = k == 0 ? first : load_image(files[k]);
    if (slice.rows() != first.rows() || slice.cols() != first.cols()) {
      throw Error("inconsistent slice size: '" + files[k].string() + "' is " +
                  std::to_string(slice.cols()) + "x" + std::to_string(slice.rows()) + ", expected " +
                  std::to_string(first.cols()) + "x" + std::to_string(first.rows()));
    }
    for (Eigen::Index j = 0; j < slice.rows(); ++j)
      for (Eigen::Index i = 0; i < slice.cols(); ++i) vol(i, j, static_cast<Eigen::Index>(k)) = slice(j, i);
  }
  return vol;
}

void save_volume(const Volume3D& vol, const fs::path& path, NiftiType type) {
  for (Eigen::Index d : vol.dims)
    if (d > 32767) throw Error("NIfTI-1 dimensions are limited to 32767");

  std::int16_t datatype = kDtFloat32;
  std::size_t elem = 4;
  if (type == NiftiType::UInt8) {
    datatype = kDtUInt8;
    elem = 1;
  } else if (type == NiftiType::Int16) {
    datatype = kDtInt16;
    elem = 2;
  }

  constexpr std::size_t kVoxOffset = 352;
  std::vector<char> out(kVoxOffset + vol.data.size() * elem, 0);
  write_scalar<std::int32_t>(out, 0, 348);
  write_scalar<std::int16_t>(out, kOffDim, 3);
  for (int d = 0; d < 3; ++d)
    write_scalar<std::int16_t>(out, kOffDim + 2 * (d + 1), static_cast<std::int16_t>(vol.dims[d]));
  for (int d = 4; d < 8; ++d) write_scalar<std::int16_t>(out, kOffDim + 2 * d, 1);
  write_scalar<std::int16_t>(out, kOffDatatype, datatype);
  write_scalar<std::int16_t>(out, kOffBitpix, static_cast<std::int16_t>(elem * 8));
  for (int d = 0; d < 4; ++d) write_scalar<float>(out, kOffPixdim + 4 * d, 1.0f);
  write_scalar<float>(out, kOffVoxOffset, static_cast<float>(kVoxOffset));
  write_scalar<float>(out, kOffSclSlope, 1.0f);
  std::memcpy(out.data() + kOffMagic, "n+1\0", 4);

  for (std::size_t i = 0; i < vol.data.size(); ++i) {
    const std::size_t off = kVoxOffset + i * elem;
    const double v = vol.data[i];
    switch (type) {
      case NiftiType::UInt8:
        out[off] = static_cast<char>(static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)));
        break;
      case NiftiType::Int16:
        write_scalar<std::int16_t>(out, off, static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L)));
        break;
      case NiftiType::Float32:
        write_scalar<float>(out, off, static_cast<float>(v));
        break;
    }
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write '" + path.string() + "'");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace forge
