#include "sdmvs/imaging.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdmvs/error.h"

namespace sdmvs {

Image::Image(int width, int height, int channels, float fill)
    : width_(width),
      height_(height),
      channels_(channels),
      samples_(static_cast<std::size_t>(width) * height * channels, fill) {}

Image::Image(int width, int height, int channels, std::vector<float> samples)
    : width_(width),
      height_(height),
      channels_(channels),
      samples_(std::move(samples)) {
  if (samples_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorCode::kDimensionMismatch,
                "sample count does not match width*height*channels");
  }
}

namespace {

void DownsampleInto(const ImageView& img, float* out) {
  const int w = img.width / 2;
  const int h = img.height / 2;
  const int ch = img.channels;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        const float sum = img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) +
                          img.at(2 * x, 2 * y + 1, c) +
                          img.at(2 * x + 1, 2 * y + 1, c);
        out[(static_cast<std::size_t>(y) * w + x) * ch + c] = 0.25f * sum;
      }
    }
  }
}

void RequireDownsampleable(const ImageView& img) {
  if (img.width < 2 * ScalePyramid::kMinLevelSide ||
      img.height < 2 * ScalePyramid::kMinLevelSide) {
    std::ostringstream why;
    why << img.width << "x" << img.height
        << " cannot be halved without dropping below 8 pixels";
    throw Error(ErrorCode::kTooSmall, why.str());
  }
}

std::size_t AlignUp(std::size_t n, std::size_t a) { return (n + a - 1) / a * a; }

}  // namespace

Image Downsample(const ImageView& img) {
  RequireDownsampleable(img);
  Image out(img.width / 2, img.height / 2, img.channels);
  DownsampleInto(img, out.samples().data());
  return out;
}

Image ToGray(const ImageView& img) {
  if (img.channels == 1) {
    return Image(img.width, img.height, 1,
                 std::vector<float>(img.samples.begin(), img.samples.end()));
  }
  Image out(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float sum = 0.0f;
      for (int c = 0; c < img.channels; ++c) sum += img.at(x, y, c);
      out.at(x, y) = sum / static_cast<float>(img.channels);
    }
  }
  return out;
}

ScalePyramid ScalePyramid::Build(const ImageView& level0, int downsample_count) {
  if (downsample_count < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "a pyramid needs at least one downsampled level");
  }
  ScalePyramid pyramid;
  std::size_t total = 0;
  int w = level0.width;
  int h = level0.height;
  for (int l = 0; l <= downsample_count; ++l) {
    if (l > 0) {
      if (w < 2 * kMinLevelSide || h < 2 * kMinLevelSide) {
        std::ostringstream why;
        why << level0.width << "x" << level0.height << " does not allow "
            << downsample_count << " halvings above the 8-pixel floor";
        throw Error(ErrorCode::kTooSmall, why.str());
      }
      w /= 2;
      h /= 2;
    }
    pyramid.levels_.push_back(LevelInfo{w, h, level0.channels, total});
    total += AlignUp(static_cast<std::size_t>(w) * h * level0.channels,
                     kLevelAlignment);
  }
  pyramid.arena_.assign(total, 0.0f);
  std::copy(level0.samples.begin(), level0.samples.end(), pyramid.arena_.begin());
  for (int l = 1; l <= downsample_count; ++l) {
    DownsampleInto(pyramid.level(l - 1),
                   pyramid.arena_.data() + pyramid.levels_[l].offset);
  }
  return pyramid;
}

ImageView ScalePyramid::level(int l) const {
  const LevelInfo& info = levels_.at(static_cast<std::size_t>(l));
  const std::size_t n =
      static_cast<std::size_t>(info.width) * info.height * info.channels;
  return ImageView{info.width, info.height, info.channels,
                   std::span<const float>(arena_.data() + info.offset, n)};
}

std::vector<float> Laplacian(const ImageView& img, int x, int y) {
  const int xm = std::max(x - 1, 0);
  const int xp = std::min(x + 1, img.width - 1);
  const int ym = std::max(y - 1, 0);
  const int yp = std::min(y + 1, img.height - 1);
  std::vector<float> out(static_cast<std::size_t>(img.channels));
  for (int c = 0; c < img.channels; ++c) {
    out[c] = 4.0f * img.at(x, y, c) - img.at(xm, y, c) - img.at(xp, y, c) -
             img.at(x, ym, c) - img.at(x, yp, c);
  }
  return out;
}

Image LaplacianImage(const ImageView& img) {
  Image out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto values = Laplacian(img, x, y);
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = values[c];
    }
  }
  return out;
}

void SampleChannels(const ImageView& img, double x, double y, float* out) {
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  for (int c = 0; c < img.channels; ++c) {
    const double top = img.at(x0, y0, c) + fx * (img.at(x1, y0, c) - img.at(x0, y0, c));
    const double bottom =
        img.at(x0, y1, c) + fx * (img.at(x1, y1, c) - img.at(x0, y1, c));
    out[c] = static_cast<float>(top + fy * (bottom - top));
  }
}

std::vector<float> SampleBilinear(const ImageView& img, double x, double y) {
  if (!img.Contains(x, y)) {
    throw Error(ErrorCode::kOutOfBounds, "bilinear sample outside the image");
  }
  std::vector<float> out(static_cast<std::size_t>(img.channels));
  SampleChannels(img, x, y, out.data());
  return out;
}

}  // namespace sdmvs
