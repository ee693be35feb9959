#pragma once

#include "forge/core.hpp"
#include "forge/random.hpp"

#include <array>

namespace forge {

/// Annular sector of the centered spectrum and the perturbation applied to it.
/// Radii are in frequency bins about DC; angles are in degrees.
struct AnnularSectorParams {
  double r_inner = 0.0;
  double r_outer = 0.0;
  double phase_shift = 0.0;
  double magnification = 1.0;
  double theta_start = 0.0;
  double theta_end = 0.0;

  bool operator==(const AnnularSectorParams&) const = default;
};

/// Throws Error unless 0 < r_inner < r_outer, theta_start < theta_end and
/// magnification > 0.
void validate(const AnnularSectorParams& p);

/// The three hand-tuned base combinations, in order.
std::array<AnnularSectorParams, 3> base_combinations();

/// Integer multipliers and step sizes behind one jitter draw.
struct RingJitter {
  int inner_step = 2;     // pixels, 2 or 3
  int inner_k = 0;        // -3..3
  int outer_step = 2;
  int outer_k = 0;
  int magnification_k = 0;  // -5..5, in units of 0.2
  double angle_step = 11.0;  // degrees, [11, 29]
  int angle_k = 0;           // -6..6
};

/// Applies one set of draws. Magnification is floored at 1.0.
AnnularSectorParams apply_jitter(const AnnularSectorParams& base, const RingJitter& draw);

/// Random shift of radii, magnification and sector angles around `base`;
/// the phase shift is kept. Radius draws repeat until r_inner < r_outer and
/// r_inner >= 4; after 100 failed rounds the base is returned.
AnnularSectorParams jitter_params(const AnnularSectorParams& base, Rng& rng);

/// Scales the sector by magnification * e^{+i phase} and its point
/// reflection by magnification * e^{-i phase}. The outcome is Hermitian
/// whenever the input is, including the unpaired Nyquist row and column of
/// even-sized grids. r_outer is clipped to the largest inscribed radius.
Spectrum2D apply_annular_perturbation(const Spectrum2D& spec, const AnnularSectorParams& p);

/// Full-frame ringing artifact image. Values may leave [0, 1].
Image2D gen_ring_artifact_image(const Image2D& img, const AnnularSectorParams& p,
                                double* max_imag = nullptr);

}  // namespace forge
