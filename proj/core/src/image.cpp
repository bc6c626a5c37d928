#include "dermanet/image.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "dermanet/errors.hpp"

namespace dermanet {

ImageTensor load_and_resize(const std::filesystem::path& path, int side) {
  if (side < 1) throw ContractViolation("resize side must be >= 1");
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) {
    throw LoadError("cannot read or decode image: " + path.string());
  }

  double scale = 1.0 / 255.0;
  if (raw.depth() == CV_16U) {
    scale = 1.0 / 65535.0;
  } else if (raw.depth() != CV_8U) {
    throw LoadError("unsupported pixel depth in " + path.string());
  }

  const int channels = raw.channels();
  if (channels == 1) {
    std::cerr << "warning: grayscale image " << path.string()
              << ", replicating channel to RGB\n";
  } else if (channels != 3 && channels != 4) {
    throw LoadError("unsupported channel count (" + std::to_string(channels) +
                    ") in " + path.string());
  }

  ImageTensor img(raw.rows, raw.cols);
  for (int y = 0; y < raw.rows; ++y) {
    for (int x = 0; x < raw.cols; ++x) {
      double r, g, b;
      if (channels == 1) {
        const double gray = (raw.depth() == CV_16U)
                                ? raw.at<std::uint16_t>(y, x) * scale
                                : raw.at<std::uint8_t>(y, x) * scale;
        r = g = b = gray;
      } else {
        // OpenCV decodes BGR(A); swap to RGB while copying.
        if (raw.depth() == CV_16U) {
          const auto* px = raw.ptr<std::uint16_t>(y) + x * channels;
          b = px[0] * scale;
          g = px[1] * scale;
          r = px[2] * scale;
        } else {
          const auto* px = raw.ptr<std::uint8_t>(y) + x * channels;
          b = px[0] * scale;
          g = px[1] * scale;
          r = px[2] * scale;
        }
      }
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
  }
  return resize_bilinear(img, side, side);
}

ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ContractViolation("resize target must be positive");
  }
  if (out_h == img.height && out_w == img.width) return img;

  ImageTensor out(out_h, out_w);
  out.normalized = img.normalized;
  const double sy = static_cast<double>(img.height) / out_h;
  const double sx = static_cast<double>(img.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top =
            img.at(c, y0, x0) * (1.0 - wx) + img.at(c, y0, x1) * wx;
        const double bot =
            img.at(c, y1, x0) * (1.0 - wx) + img.at(c, y1, x1) * wx;
        out.at(c, y, x) = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return out;
}

ImageTensor normalize(const ImageTensor& img, const std::array<double, 3>& mean,
                      const std::array<double, 3>& std) {
  if (img.normalized) {
    throw ContractViolation("normalize: input is already normalized");
  }
  for (double s : std) {
    if (s == 0.0) throw ContractViolation("normalize: zero std component");
  }
  ImageTensor out = img;
  out.normalized = true;
  for (int c = 0; c < 3; ++c) {
    const std::size_t base = static_cast<std::size_t>(c) * img.height * img.width;
    const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
    for (std::size_t i = 0; i < n; ++i) {
      out.data[base + i] = (img.data[base + i] - mean[c]) / std[c];
    }
  }
  return out;
}

ImageTensor denormalize(const ImageTensor& img,
                        const std::array<double, 3>& mean,
                        const std::array<double, 3>& std) {
  if (!img.normalized) {
    throw ContractViolation("denormalize: input is not normalized");
  }
  ImageTensor out = img;
  out.normalized = false;
  for (int c = 0; c < 3; ++c) {
    const std::size_t base = static_cast<std::size_t>(c) * img.height * img.width;
    const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
    for (std::size_t i = 0; i < n; ++i) {
      out.data[base + i] = img.data[base + i] * std[c] + mean[c];
    }
  }
  return out;
}

}  // namespace dermanet
