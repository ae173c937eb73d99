#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sdmvs {

// Non-owning view of a row-major, channel-interleaved float image.
struct ImageView {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::span<const float> samples;

  float at(int x, int y, int c = 0) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool Contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x <= width - 1.0 && y <= height - 1.0;
  }
};

class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);
  Image(int width, int height, int channels, std::vector<float> samples);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t size() const { return samples_.size(); }

  float& at(int x, int y, int c = 0) {
    return samples_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int x, int y, int c = 0) const {
    return samples_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  const std::vector<float>& samples() const { return samples_; }
  std::vector<float>& samples() { return samples_; }

  ImageView view() const {
    return ImageView{width_, height_, channels_, samples_};
  }
  operator ImageView() const { return view(); }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<float> samples_;
};

// Half-resolution 2x2 box average; output is floor(input / 2) per axis.
// Throws Error(kTooSmall) for inputs below 16 pixels in either axis.
Image Downsample(const ImageView& img);

Image ToGray(const ImageView& img);

// Mipmap-style pyramid whose levels share one contiguous arena so the whole
// stack can be handed around (or uploaded) as a single block.
class ScalePyramid {
 public:
  static constexpr int kMinLevelSide = 8;
  // Per-level storage is rounded up to this many floats.
  static constexpr std::size_t kLevelAlignment = 16;

  ScalePyramid() = default;
  // Builds downsample_count + 1 levels. Throws Error(kInvalidArgument) for
  // downsample_count < 1 and Error(kTooSmall) when a level would drop below
  // the 8-pixel floor.
  static ScalePyramid Build(const ImageView& level0, int downsample_count);

  int level_count() const { return static_cast<int>(levels_.size()); }
  ImageView level(int l) const;
  std::span<const float> arena() const { return arena_; }
  std::size_t arena_size() const { return arena_.size(); }

 private:
  struct LevelInfo {
    int width;
    int height;
    int channels;
    std::size_t offset;
  };
  std::vector<float> arena_;
  std::vector<LevelInfo> levels_;
};

// Per-channel 4-neighbour Laplacian 4*I(p) - sum(neighbours), with
// clamp-to-edge neighbours.
std::vector<float> Laplacian(const ImageView& img, int x, int y);
Image LaplacianImage(const ImageView& img);

// Bilinear interpolation; throws Error(kOutOfBounds) outside
// [0, width-1] x [0, height-1].
std::vector<float> SampleBilinear(const ImageView& img, double x, double y);

// Unchecked single-channel bilinear sample; caller guarantees bounds.
inline float SampleGray(const ImageView& img, float x, float y) {
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = x0 + 1 < img.width ? x0 + 1 : x0;
  const int y1 = y0 + 1 < img.height ? y0 + 1 : y0;
  const float fx = x - static_cast<float>(x0);
  const float fy = y - static_cast<float>(y0);
  const float* row0 = img.samples.data() + static_cast<std::size_t>(y0) * img.width;
  const float* row1 = img.samples.data() + static_cast<std::size_t>(y1) * img.width;
  const float top = row0[x0] + fx * (row0[x1] - row0[x0]);
  const float bottom = row1[x0] + fx * (row1[x1] - row1[x0]);
  return top + fy * (bottom - top);
}

// Unchecked multi-channel bilinear sample into out[0..channels).
void SampleChannels(const ImageView& img, double x, double y, float* out);

}  // namespace sdmvs
