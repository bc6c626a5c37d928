#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

namespace dermanet {

inline constexpr int kImageSide = 224;
inline constexpr std::array<double, 3> kImagenetMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImagenetStd{0.229, 0.224, 0.225};

/// A 3-channel, channel-major (CHW) floating image. Values are pixel/255 in
/// [0, 1] until normalize() is applied, after which `normalized` is set and
/// values are (pixel/255 - mean_c) / std_c.
struct ImageTensor {
  int height = 0;
  int width = 0;
  bool normalized = false;
  std::vector<double> data;  // size 3 * height * width

  ImageTensor() = default;
  ImageTensor(int h, int w)
      : height(h), width(w), data(static_cast<std::size_t>(3) * h * w, 0.0) {}

  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

/// Decodes a JPEG/PNG file and resizes to side x side with bilinear
/// interpolation (half-pixel centers). Grayscale inputs are replicated to
/// three channels with a warning on stderr. Values come out in [0, 1],
/// unnormalized. Throws LoadError for unreadable or undecodable files.
ImageTensor load_and_resize(const std::filesystem::path& path,
                            int side = kImageSide);

/// Bilinear resample with half-pixel source centers; identity when the
/// output size equals the input size.
ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w);

/// Per-channel standardization: out_c = (in_c - mean_c) / std_c. The input
/// must be unnormalized; re-normalizing is a contract violation because
/// double standardization silently corrupts statistics.
ImageTensor normalize(const ImageTensor& img,
                      const std::array<double, 3>& mean = kImagenetMean,
                      const std::array<double, 3>& std = kImagenetStd);

/// Inverse of normalize().
ImageTensor denormalize(const ImageTensor& img,
                        const std::array<double, 3>& mean = kImagenetMean,
                        const std::array<double, 3>& std = kImagenetStd);

}  // namespace dermanet
