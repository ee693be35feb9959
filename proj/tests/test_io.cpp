#include "forge/io.hpp"
#include "forge/random.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

using namespace forge;
namespace fs = std::filesystem;

namespace {

void write_pgm(const fs::path& p, int w, int h, const std::vector<int>& px, bool binary, int maxval = 255) {
  std::ofstream out(p, std::ios::binary);
  out << (binary ? "P5" : "P2") << "\n# comment\n" << w << " " << h << "\n" << maxval << "\n";
  for (int v : px) {
    if (!binary)
      out << v << " ";
    else if (maxval < 256)
      out.put(static_cast<char>(v));
    else {
      out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xff));
    }
  }
}

// Minimal big-endian int16 NIfTI-1 file written byte by byte.
void write_big_endian_nifti(const fs::path& p, std::int16_t ndim, const std::vector<std::int16_t>& values,
                            std::array<std::int16_t, 3> dims, float slope = 0.0f, float inter = 0.0f) {
  std::vector<unsigned char> buf(352 + values.size() * 2, 0);
  auto put16 = [&](std::size_t off, std::int16_t v) {
    buf[off] = static_cast<unsigned char>((v >> 8) & 0xff);
    buf[off + 1] = static_cast<unsigned char>(v & 0xff);
  };
  auto put32 = [&](std::size_t off, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf[off + i] = static_cast<unsigned char>(v >> (24 - 8 * i));
  };
  auto putf = [&](std::size_t off, float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put32(off, u);
  };
  put32(0, 348);
  put16(40, ndim);
  for (int d = 0; d < 3; ++d) put16(42 + 2 * d, dims[d]);
  put16(48, 1);
  put16(70, 4);  // int16
  put16(72, 16);
  putf(108, 352.0f);
  putf(112, slope);
  putf(116, inter);
  std::memcpy(buf.data() + 344, "n+1", 4);
  for (std::size_t i = 0; i < values.size(); ++i) put16(352 + 2 * i, values[i]);
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(buf.data()), static_cast<long>(buf.size()));
}

}  // namespace

TEST(Nifti, RoundTripAllTypes) {
  TempDir dir;
  Volume3D vol(5, 4, 3);
  for (std::size_t i = 0; i < vol.data.size(); ++i) vol.data[i] = static_cast<double>(i * 3 % 200);
  for (NiftiType t : {NiftiType::UInt8, NiftiType::Int16, NiftiType::Float32}) {
    const fs::path p = dir / "v.nii";
    save_volume(vol, p, t);
    const Volume3D back = load_volume(p);
    EXPECT_EQ(back.dims, vol.dims);
    EXPECT_EQ(back.data, vol.data);
  }
}

TEST(Nifti, ZeroVolume) {
  TempDir dir;
  save_volume(Volume3D(4, 4, 4), dir / "z.nii", NiftiType::Int16);
  const Volume3D v = load_volume(dir / "z.nii");
  EXPECT_EQ(v.dims, (std::array<Eigen::Index, 3>{4, 4, 4}));
  for (double x : v.data) EXPECT_EQ(x, 0.0);
}

TEST(Nifti, BigEndianWithScaling) {
  TempDir dir;
  std::vector<std::int16_t> vals(24);
  for (int i = 0; i < 24; ++i) vals[i] = static_cast<std::int16_t>(i * 100 - 500);
  write_big_endian_nifti(dir / "be.nii", 3, vals, {2, 3, 4});
  const Volume3D v = load_volume(dir / "be.nii");
  EXPECT_EQ(v.dims, (std::array<Eigen::Index, 3>{2, 3, 4}));
  EXPECT_EQ(v(1, 2, 3), 1800.0);
  EXPECT_EQ(v(0, 0, 0), -500.0);

  write_big_endian_nifti(dir / "scaled.nii", 3, vals, {2, 3, 4}, 0.5f, 10.0f);
  EXPECT_EQ(load_volume(dir / "scaled.nii")(1, 2, 3), 910.0);
}

TEST(Nifti, FourDimensionalRejected) {
  TempDir dir;
  write_big_endian_nifti(dir / "4d.nii", 4, std::vector<std::int16_t>(8, 0), {2, 2, 2});
  try {
    load_volume(dir / "4d.nii");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported dimensionality"), std::string::npos);
  }
}

TEST(Nifti, TruncatedHeaderNamesOffset) {
  TempDir dir;
  std::ofstream(dir / "short.nii", std::ios::binary) << "tiny";
  try {
    load_volume(dir / "short.nii");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos) << e.what();
  }
}

TEST(Volume, MissingPathIsUsageError) { EXPECT_THROW(load_volume("/nonexistent/vol.nii"), UsageError); }

TEST(Volume, DirectoryOfPgmSlices) {
  TempDir dir;
  for (int k = 0; k < 3; ++k) {
    std::vector<int> px(64);
    for (int i = 0; i < 64; ++i) px[i] = i + k;
    write_pgm(dir / ("s" + std::to_string(k) + ".pgm"), 8, 8, px, k != 1);
  }
  const Volume3D v = load_volume(dir.path());
  EXPECT_EQ(v.dims, (std::array<Eigen::Index, 3>{8, 8, 3}));
  EXPECT_NEAR(v(3, 2, 2), (19 + 2) / 255.0, 1e-12);
}

TEST(Pgm, SixteenBit) {
  TempDir dir;
  write_pgm(dir / "a.pgm", 2, 1, {0, 1000}, true, 1000);
  const Image2D img = load_image(dir / "a.pgm");
  EXPECT_EQ(img(0, 0), 0.0);
  EXPECT_EQ(img(0, 1), 1.0);
}

TEST(Png, RoundTrip) {
  TempDir dir;
  save_image(Image2D::Zero(7, 9), dir / "z.png");
  EXPECT_TRUE((load_image(dir / "z.png") == 0.0).all());

  Rng rng(1);
  Image2D img(33, 17);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform();
  save_image(img, dir / "r.png");
  const Image2D back = load_image(dir / "r.png");
  EXPECT_LE((back - img).abs().maxCoeff(), 1.0 / 65535.0);
  EXPECT_TRUE((back == quantize16(img)).all());
  EXPECT_TRUE((quantize16(back) == back).all());
}

TEST(Png, RejectsColorImages) {
  // 1x1 RGB PNG.
  const unsigned char rgb_png[] = {
      0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00,
      0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00, 0x00, 0x90, 0x77, 0x53, 0xde, 0x00,
      0x00, 0x00, 0x0c, 0x49, 0x44, 0x41, 0x54, 0x08, 0xd7, 0x63, 0xf8, 0xcf, 0xc0, 0x00, 0x00, 0x03, 0x01,
      0x01, 0x00, 0x18, 0xdd, 0x8d, 0xb0, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60,
      0x82};
  TempDir dir;
  std::ofstream(dir / "rgb.png", std::ios::binary).write(reinterpret_cast<const char*>(rgb_png), sizeof rgb_png);
  try {
    load_image(dir / "rgb.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("grayscale"), std::string::npos) << e.what();
  }
}
