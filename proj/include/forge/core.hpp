#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

/// Dense 2D raster. Rows index y (height), columns index x (width).
template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Image2D = Raster<double>;
using Mask2D = Raster<bool>;

/// Complex frequency grid with the DC bin at (rows / 2, cols / 2).
using Spectrum2D = Raster<std::complex<double>>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad flags, bad config, missing input. The CLI maps it to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Axis { Sagittal, Coronal, Axial };

inline constexpr std::array<Axis, 3> kAllAxes{Axis::Sagittal, Axis::Coronal, Axis::Axial};

std::string_view to_string(Axis axis);
Axis axis_from_string(std::string_view name);

/// Scan volume. Voxel (i, j, k) lives at data[i + nx * (j + ny * k)].
struct Volume3D {
  std::array<Eigen::Index, 3> dims{1, 1, 1};
  std::vector<double> data;
  /// Anatomical axis spanned by each storage dimension.
  std::array<Axis, 3> axis_of_dim{Axis::Sagittal, Axis::Coronal, Axis::Axial};

  Volume3D() = default;
  Volume3D(Eigen::Index nx, Eigen::Index ny, Eigen::Index nz, double fill = 0.0);

  Eigen::Index nx() const { return dims[0]; }
  Eigen::Index ny() const { return dims[1]; }
  Eigen::Index nz() const { return dims[2]; }

  double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) {
    return data[static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k))];
  }
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
    return data[static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k))];
  }

  /// Number of slices along an anatomical axis.
  Eigen::Index extent(Axis axis) const;
};

/// Min-max rescale to [0, 1]. A constant input maps to all zeros.
template <typename Derived>
Raster<typename Derived::Scalar> normalize(const Eigen::ArrayBase<Derived>& img) {
  using Scalar = typename Derived::Scalar;
  Raster<Scalar> out = img;
  if (out.size() == 0) return out;
  const Scalar lo = out.minCoeff();
  const Scalar hi = out.maxCoeff();
  if (!(hi > lo)) return Raster<Scalar>::Zero(out.rows(), out.cols());
  out = (out - lo) / (hi - lo);
  return out;
}

/// The plane at `index` along `axis`, min-max normalized.
///
/// Sagittal planes are (ny wide, nz tall), coronal (nx, nz), axial (nx, ny)
/// for the default dimension mapping.
Image2D extract_slice(const Volume3D& vol, Axis axis, Eigen::Index index);

/// Same plane with intensities as stored.
Image2D raw_slice(const Volume3D& vol, Axis axis, Eigen::Index index);

/// Bilinear interpolation at real pixel coordinates; out-of-range
/// coordinates are clamped to the border.
double bilinear_sample(const Image2D& img, double x, double y);

/// Element-wise clip to [0, 1].
template <typename Derived>
Raster<typename Derived::Scalar> clip_unit(const Eigen::ArrayBase<Derived>& img) {
  return img.derived().max(typename Derived::Scalar(0)).min(typename Derived::Scalar(1));
}

}  // namespace forge
