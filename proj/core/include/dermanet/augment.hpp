#pragma once

#include "dermanet/image.hpp"
#include "dermanet/rng.hpp"

namespace dermanet {

/// Stochastic training-time transformation parameters. Zoom only scales up
/// (scale then center-crop back to the input size).
struct AugmentationPolicy {
  double p_hflip = 0.5;
  double p_vflip = 0.5;
  double zoom_min = 1.0;
  double zoom_max = 1.1;

  bool operator==(const AugmentationPolicy&) const = default;

  void validate() const;

  /// Identity policy: no flips, zoom pinned at 1.0.
  static AugmentationPolicy none() { return {0.0, 0.0, 1.0, 1.0}; }
};

/// Parameters actually drawn for one augment() call; exposed for tests.
struct AugmentationDraw {
  bool hflip = false;
  bool vflip = false;
  double zoom = 1.0;
};

ImageTensor hflip(const ImageTensor& img);
ImageTensor vflip(const ImageTensor& img);
ImageTensor center_crop(const ImageTensor& img, int side);

/// Applies, in order: horizontal flip with p_hflip, vertical flip with
/// p_vflip, zoom by s ~ Uniform[zoom_min, zoom_max] (resize to
/// round(side * s), center-crop back). Output dimensions equal input
/// dimensions. Exactly three RNG draws are consumed per call.
ImageTensor augment(const ImageTensor& img, const AugmentationPolicy& policy,
                    Rng& rng, AugmentationDraw* draw = nullptr);

}  // namespace dermanet
