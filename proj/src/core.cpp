#include "forge/core.hpp"

#include <cmath>

namespace forge {

std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::Sagittal: return "sagittal";
    case Axis::Coronal: return "coronal";
    case Axis::Axial: return "axial";
  }
  return "unknown";
}

Axis axis_from_string(std::string_view name) {
  if (name == "sagittal") return Axis::Sagittal;
  if (name == "coronal") return Axis::Coronal;
  if (name == "axial") return Axis::Axial;
  throw UsageError("unknown axis '" + std::string(name) + "'");
}

Volume3D::Volume3D(Eigen::Index nx, Eigen::Index ny, Eigen::Index nz, double fill)
    : dims{nx, ny, nz} {
  if (nx < 1 || ny < 1 || nz < 1) throw Error("volume dimensions must be >= 1");
  data.assign(static_cast<std::size_t>(nx * ny * nz), fill);
}

namespace {

int dim_of(const Volume3D& vol, Axis axis) {
  for (int d = 0; d < 3; ++d)
    if (vol.axis_of_dim[d] == axis) return d;
  throw Error("volume has no dimension labelled " + std::string(to_string(axis)));
}

}  // namespace

Eigen::Index Volume3D::extent(Axis axis) const { return dims[dim_of(*this, axis)]; }

Image2D raw_slice(const Volume3D& vol, Axis axis, Eigen::Index index) {
  const int d = dim_of(vol, axis);
  if (index < 0 || index >= vol.dims[d]) {
    throw Error("slice index " + std::to_string(index) + " out of range for " +
                std::string(to_string(axis)) + " extent " + std::to_string(vol.dims[d]));
  }
  // The two remaining dimensions, lower one along x.
  const int du = d == 0 ? 1 : 0;
  const int dv = d == 2 ? 1 : 2;
  Image2D plane(vol.dims[dv], vol.dims[du]);
  std::array<Eigen::Index, 3> ijk{};
  ijk[d] = index;
  for (Eigen::Index v = 0; v < vol.dims[dv]; ++v) {
    ijk[dv] = v;
    for (Eigen::Index u = 0; u < vol.dims[du]; ++u) {
      ijk[du] = u;
      plane(v, u) = vol(ijk[0], ijk[1], ijk[2]);
    }
  }
  return plane;
}

Image2D extract_slice(const Volume3D& vol, Axis axis, Eigen::Index index) {
  return normalize(raw_slice(vol, axis, index));
}

double bilinear_sample(const Image2D& img, double x, double y) {
  const Eigen::Index w = img.cols();
  const Eigen::Index h = img.rows();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const auto x0 = std::min(static_cast<Eigen::Index>(std::floor(x)), w - 1);
  const auto y0 = std::min(static_cast<Eigen::Index>(std::floor(y)), h - 1);
  const Eigen::Index x1 = std::min(x0 + 1, w - 1);
  const Eigen::Index y1 = std::min(y0 + 1, h - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double top = img(y0, x0) + fx * (img(y0, x1) - img(y0, x0));
  const double bottom = img(y1, x0) + fx * (img(y1, x1) - img(y1, x0));
  return top + fy * (bottom - top);
}

}  // namespace forge
