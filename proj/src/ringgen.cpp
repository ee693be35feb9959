#include "forge/ringgen.hpp"

#include "forge/fft.hpp"

#include <cmath>
#include <numbers>

namespace forge {

void validate(const AnnularSectorParams& p) {
  if (!(p.r_inner > 0.0 && p.r_inner < p.r_outer))
    throw Error("annular sector needs 0 < r_inner < r_outer");
  if (!(p.theta_start < p.theta_end)) throw Error("annular sector needs theta_start < theta_end");
  if (!(p.magnification > 0.0)) throw Error("annular sector needs magnification > 0");
}

std::array<AnnularSectorParams, 3> base_combinations() {
  return {{
      {61.0, 66.0, 144.0, 9.0, 10.0, 38.0},
      {55.0, 105.0, 29.0, 8.0, 29.0, 57.0},
      {60.0, 80.0, 9.0, 6.0, 11.0, 46.0},
  }};
}

AnnularSectorParams apply_jitter(const AnnularSectorParams& base, const RingJitter& draw) {
  AnnularSectorParams p = base;
  p.r_inner += draw.inner_step * draw.inner_k;
  p.r_outer += draw.outer_step * draw.outer_k;
  p.magnification = std::max(1.0, base.magnification + 0.2 * draw.magnification_k);
  const double delta = draw.angle_step * draw.angle_k;
  p.theta_start += delta;
  p.theta_end += delta;
  return p;
}

AnnularSectorParams jitter_params(const AnnularSectorParams& base, Rng& rng) {
  constexpr int kMaxRounds = 100;
  RingJitter draw;
  bool radii_ok = false;
  for (int round = 0; round < kMaxRounds && !radii_ok; ++round) {
    draw.inner_step = static_cast<int>(rng.uniform_int(2, 3));
    draw.inner_k = static_cast<int>(rng.uniform_int(-3, 3));
    draw.outer_step = static_cast<int>(rng.uniform_int(2, 3));
    draw.outer_k = static_cast<int>(rng.uniform_int(-3, 3));
    const double inner = base.r_inner + draw.inner_step * draw.inner_k;
    const double outer = base.r_outer + draw.outer_step * draw.outer_k;
    radii_ok = inner < outer && inner >= 4.0;
  }
  if (!radii_ok) return base;
  draw.magnification_k = static_cast<int>(rng.uniform_int(-5, 5));
  draw.angle_step = rng.uniform(11.0, 29.0);
  draw.angle_k = static_cast<int>(rng.uniform_int(-6, 6));
  return apply_jitter(base, draw);
}

namespace {

struct SectorTest {
  double cx, cy, r_inner, r_outer, theta_start, span;

  bool operator()(Eigen::Index row, Eigen::Index col) const {
    const double dx = static_cast<double>(col) - cx;
    const double dy = static_cast<double>(row) - cy;
    const double rho = std::hypot(dx, dy);
    if (rho < r_inner || rho > r_outer) return false;
    if (span >= 360.0) return true;
    const double theta = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
    double rel = std::fmod(theta - theta_start, 360.0);
    if (rel < 0.0) rel += 360.0;
    return rel <= span;
  }
};

}  // namespace

Spectrum2D apply_annular_perturbation(const Spectrum2D& spec, const AnnularSectorParams& p) {
  validate(p);
  const Eigen::Index h = spec.rows();
  const Eigen::Index w = spec.cols();
  const double inscribed = static_cast<double>(std::min(w / 2, h / 2));
  const SectorTest in_sector{static_cast<double>(w / 2), static_cast<double>(h / 2), p.r_inner,
                             std::min(p.r_outer, inscribed), p.theta_start, p.theta_end - p.theta_start};

  const double phase = p.phase_shift * std::numbers::pi / 180.0;
  const std::complex<double> gain = std::polar(p.magnification, phase);

  Spectrum2D out = spec;
  for (Eigen::Index r = 0; r < h; ++r) {
    const Eigen::Index mr = mirror_index(r, h);
    for (Eigen::Index c = 0; c < w; ++c) {
      const bool here = in_sector(r, c);
      const bool partner = in_sector(mr, mirror_index(c, w));
      // Deciding each bin from its own and its partner's membership keeps
      // factor(partner) == conj(factor(bin)) exactly.
      if (here && partner)
        out(r, c) *= p.magnification;
      else if (here)
        out(r, c) *= gain;
      else if (partner)
        out(r, c) *= std::conj(gain);
    }
  }
  return out;
}

Image2D gen_ring_artifact_image(const Image2D& img, const AnnularSectorParams& p, double* max_imag) {
  return ifft2_centered(apply_annular_perturbation(fft2_centered(img), p), max_imag);
}

}  // namespace forge
