#include "dermanet/augment.hpp"

#include <cmath>

#include "dermanet/errors.hpp"

namespace dermanet {

void AugmentationPolicy::validate() const {
  if (p_hflip < 0.0 || p_hflip > 1.0 || p_vflip < 0.0 || p_vflip > 1.0) {
    throw ConfigError("flip probabilities must lie in [0, 1]");
  }
  if (!(zoom_min >= 1.0) || !(zoom_max >= zoom_min)) {
    throw ConfigError("zoom range must satisfy 1.0 <= zoom_min <= zoom_max");
  }
}

ImageTensor hflip(const ImageTensor& img) {
  ImageTensor out(img.height, img.width);
  out.normalized = img.normalized;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
  return out;
}

ImageTensor vflip(const ImageTensor& img) {
  ImageTensor out(img.height, img.width);
  out.normalized = img.normalized;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(c, y, x) = img.at(c, img.height - 1 - y, x);
  return out;
}

ImageTensor center_crop(const ImageTensor& img, int side) {
  if (side > img.height || side > img.width) {
    throw ContractViolation("center_crop: crop larger than image");
  }
  if (side == img.height && side == img.width) return img;
  const int oy = (img.height - side) / 2;
  const int ox = (img.width - side) / 2;
  ImageTensor out(side, side);
  out.normalized = img.normalized;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        out.at(c, y, x) = img.at(c, y + oy, x + ox);
  return out;
}

ImageTensor augment(const ImageTensor& img, const AugmentationPolicy& policy,
                    Rng& rng, AugmentationDraw* draw) {
  policy.validate();
  if (img.height != img.width) {
    throw ContractViolation("augment: expected a square image");
  }

  AugmentationDraw d;
  d.hflip = rng.bernoulli(policy.p_hflip);
  d.vflip = rng.bernoulli(policy.p_vflip);
  d.zoom = rng.uniform(policy.zoom_min, policy.zoom_max);
  if (draw) *draw = d;

  ImageTensor out = img;
  if (d.hflip) out = hflip(out);
  if (d.vflip) out = vflip(out);
  if (d.zoom != 1.0) {
    const int side = img.height;
    const int scaled = static_cast<int>(std::lround(side * d.zoom));
    out = center_crop(resize_bilinear(out, scaled, scaled), side);
  }
  return out;
}

}  // namespace dermanet
