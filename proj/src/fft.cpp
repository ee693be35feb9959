#include "forge/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <sstream>
#include <vector>

namespace forge {
namespace {

using Complex = std::complex<double>;

// Transforms every row and then every column in place.
void transform_2d(Spectrum2D& grid, bool inverse) {
  Eigen::FFT<double> fft;
  const Eigen::Index h = grid.rows();
  const Eigen::Index w = grid.cols();

  std::vector<Complex> in(static_cast<std::size_t>(std::max(w, h)));
  std::vector<Complex> out(in.size());
  auto run = [&](Eigen::Index n) {
    if (inverse)
      fft.inv(out.data(), in.data(), n);
    else
      fft.fwd(out.data(), in.data(), n);
  };

  // A length-1 transform is the identity (and kissfft does not terminate on it).
  for (Eigen::Index r = 0; r < h && w > 1; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) in[c] = grid(r, c);
    run(w);
    for (Eigen::Index c = 0; c < w; ++c) grid(r, c) = out[c];
  }
  for (Eigen::Index c = 0; c < w && h > 1; ++c) {
    for (Eigen::Index r = 0; r < h; ++r) in[r] = grid(r, c);
    run(h);
    for (Eigen::Index r = 0; r < h; ++r) grid(r, c) = out[r];
  }
}

// shift = +1 moves DC to the center, -1 moves it back to (0, 0).
Spectrum2D circular_shift(const Spectrum2D& in, int shift) {
  const Eigen::Index h = in.rows();
  const Eigen::Index w = in.cols();
  const Eigen::Index sy = shift > 0 ? h / 2 : h - h / 2;
  const Eigen::Index sx = shift > 0 ? w / 2 : w - w / 2;
  Spectrum2D out(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) out((r + sy) % h, (c + sx) % w) = in(r, c);
  return out;
}

}  // namespace

Spectrum2D fft2_centered(const Image2D& img) {
  Spectrum2D grid = img.cast<Complex>();
  if (grid.size() > 0) transform_2d(grid, false);
  return circular_shift(grid, +1);
}

double hermitian_defect(const Spectrum2D& spec, Eigen::Index* worst_row, Eigen::Index* worst_col) {
  const Eigen::Index h = spec.rows();
  const Eigen::Index w = spec.cols();
  const double peak = spec.size() ? spec.abs().maxCoeff() : 0.0;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < h; ++r) {
    const Eigen::Index mr = mirror_index(r, h);
    for (Eigen::Index c = 0; c < w; ++c) {
      const double d = std::abs(spec(mr, mirror_index(c, w)) - std::conj(spec(r, c)));
      if (d > worst) {
        worst = d;
        if (worst_row) *worst_row = r;
        if (worst_col) *worst_col = c;
      }
    }
  }
  return peak > 0.0 ? worst / peak : 0.0;
}

Image2D ifft2_centered(const Spectrum2D& spec, double* max_imag) {
  constexpr double kTolerance = 1e-6;
  Eigen::Index wr = 0, wc = 0;
  const double defect = hermitian_defect(spec, &wr, &wc);
  if (defect > kTolerance) {
    std::ostringstream msg;
    msg << "spectrum is not Hermitian-symmetric: bin (row " << wr << ", col " << wc
        << ") deviates from its conjugate partner by " << defect << " of the peak modulus";
    throw Error(msg.str());
  }
  Spectrum2D grid = circular_shift(spec, -1);
  if (grid.size() > 0) transform_2d(grid, true);
  if (max_imag) *max_imag = grid.size() ? grid.imag().abs().maxCoeff() : 0.0;
  return grid.real();
}

}  // namespace forge
