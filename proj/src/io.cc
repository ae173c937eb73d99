#include "sdmvs/io.h"

#include <png.h>

#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include <Eigen/Geometry>

#include "sdmvs/error.h"

namespace sdmvs {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int max_value = 255;
  std::vector<std::uint16_t> samples;
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr OpenFile(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw Error(mode[0] == 'r' ? ErrorCode::kMissingFile : ErrorCode::kIoError,
                "cannot open " + path);
  }
  return f;
}

void PngError(png_structp png, png_const_charp message) {
  auto* buffer = static_cast<std::string*>(png_get_error_ptr(png));
  if (buffer) *buffer = message;
  png_longjmp(png, 1);
}

void PngWarning(png_structp, png_const_charp) {}

RawImage ReadPngRaw(const std::string& path) {
  FilePtr file = OpenFile(path, "rb");
  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8)) {
    throw Error(ErrorCode::kDecodeError, path + " is not a PNG file");
  }
  std::string message;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, PngError, PngWarning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kDecodeError, "libpng initialisation failed");
  }
  RawImage out;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kDecodeError, path + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  // Drop alpha: gray+alpha -> gray, RGBA -> RGB.
  const int keep = channels == 2 ? 1 : (channels == 4 ? 3 : channels);
  out.channels = keep;
  out.max_value = depth == 16 ? 65535 : 255;
  out.samples.resize(static_cast<std::size_t>(out.width) * out.height * keep);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < keep; ++c) {
        const std::size_t src = static_cast<std::size_t>(x) * channels + c;
        std::uint16_t v;
        if (depth == 16) {
          std::memcpy(&v, rows[y] + 2 * src, 2);
        } else {
          v = rows[y][src];
        }
        out.samples[(static_cast<std::size_t>(y) * out.width + x) * keep + c] = v;
      }
    }
  }
  return out;
}

void WritePngRaw(const std::string& path, int width, int height, int channels,
                 const std::vector<std::uint16_t>& samples) {
  FilePtr file = OpenFile(path, "wb");
  std::string message;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, PngError, PngWarning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIoError, "libpng initialisation failed");
  }
  std::vector<png_byte> buffer(static_cast<std::size_t>(width) * channels * 2 * height);
  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIoError, path + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 16,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    rows[y] = buffer.data() + static_cast<std::size_t>(y) * width * channels * 2;
    for (int i = 0; i < width * channels; ++i) {
      const std::uint16_t v = samples[static_cast<std::size_t>(y) * width * channels + i];
      rows[y][2 * i] = static_cast<png_byte>(v >> 8);
      rows[y][2 * i + 1] = static_cast<png_byte>(v & 0xff);
    }
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

// Next whitespace-separated token of a PNM header, skipping comments.
std::string PnmToken(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(c);
  }
  return token;
}

RawImage ReadPnmRaw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path);
  const std::string magic = PnmToken(in);
  if (magic != "P5" && magic != "P6") {
    throw Error(ErrorCode::kDecodeError, path + ": only binary P5/P6 supported");
  }
  RawImage out;
  try {
    out.width = std::stoi(PnmToken(in));
    out.height = std::stoi(PnmToken(in));
    out.max_value = std::stoi(PnmToken(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kDecodeError, path + ": malformed PNM header");
  }
  if (out.width <= 0 || out.height <= 0 || out.max_value <= 0 ||
      out.max_value > 65535) {
    throw Error(ErrorCode::kDecodeError, path + ": malformed PNM header");
  }
  out.channels = magic == "P6" ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  const int bytes = out.max_value > 255 ? 2 : 1;
  std::vector<unsigned char> data(n * bytes);
  if (!in.read(reinterpret_cast<char*>(data.data()), data.size())) {
    throw Error(ErrorCode::kTruncatedFile, path + ": pixel data truncated");
  }
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = bytes == 2 ? static_cast<std::uint16_t>(data[2 * i] << 8 | data[2 * i + 1])
                                : data[i];
  }
  return out;
}

bool HasExtension(const std::string& path, std::initializer_list<const char*> exts) {
  std::string ext = fs::path(path).extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const char* e : exts) {
    if (ext == e) return true;
  }
  return false;
}

RawImage ReadRaw(const std::string& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingFile, "missing file " + path);
  if (HasExtension(path, {".ppm", ".pgm", ".pnm"})) return ReadPnmRaw(path);
  return ReadPngRaw(path);
}

template <typename T>
void WritePod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void WriteArray(std::ostream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

}  // namespace

Image LoadImage(const std::string& path) {
  const RawImage raw = ReadRaw(path);
  std::vector<float> samples(raw.samples.size());
  const float scale = 1.0f / static_cast<float>(raw.max_value);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = raw.samples[i] * scale;
  return Image(raw.width, raw.height, raw.channels, std::move(samples));
}

void SavePng16(const std::string& path, const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "PNG output needs 1 or 3 channels");
  }
  std::vector<std::uint16_t> samples(img.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double v = std::clamp(static_cast<double>(img.samples()[i]), 0.0, 1.0);
    samples[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  }
  WritePngRaw(path, img.width(), img.height(), img.channels(), samples);
}

namespace {

LabelMap ReadRle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "SDMVS-RLE" || version != 1) {
    throw Error(ErrorCode::kDecodeError, path + ": not an SDMVS-RLE 1 file");
  }
  long long w = 0, h = 0;
  if (!(in >> w >> h) || w <= 0 || h <= 0) {
    throw Error(ErrorCode::kDecodeError, path + ": bad dimensions");
  }
  const std::size_t total = static_cast<std::size_t>(w) * h;
  std::vector<std::uint32_t> labels;
  labels.reserve(total);
  long long label = 0, run = 0;
  while (in >> label >> run) {
    if (label < 0 || label > std::numeric_limits<std::uint32_t>::max() || run <= 0 ||
        labels.size() + run > total) {
      throw Error(ErrorCode::kDecodeError, path + ": bad run");
    }
    labels.insert(labels.end(), static_cast<std::size_t>(run),
                  static_cast<std::uint32_t>(label));
  }
  if (!in.eof() || labels.size() != total) {
    throw Error(ErrorCode::kDecodeError, path + ": runs do not cover the image");
  }
  return LabelMap(static_cast<int>(w), static_cast<int>(h), std::move(labels));
}

}  // namespace

LabelMap LoadLabelMap(const std::string& path, int expected_width,
                      int expected_height) {
  LabelMap labels;
  bool is_rle = HasExtension(path, {".rle", ".txt"});
  if (!is_rle) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw Error(ErrorCode::kMissingFile, "cannot open " + path);
    char head[9] = {};
    probe.read(head, 9);
    is_rle = std::string(head, 9) == "SDMVS-RLE";
  }
  if (is_rle) {
    labels = ReadRle(path);
  } else {
    const RawImage raw = ReadRaw(path);
    if (raw.channels != 1) {
      throw Error(ErrorCode::kDecodeError, path + ": label PNG must be single-channel");
    }
    labels = LabelMap(raw.width, raw.height,
                      std::vector<std::uint32_t>(raw.samples.begin(), raw.samples.end()));
  }
  if (expected_width > 0 &&
      (labels.width() != expected_width || labels.height() != expected_height)) {
    std::ostringstream why;
    why << path << " is " << labels.width() << "x" << labels.height()
        << ", expected " << expected_width << "x" << expected_height;
    throw Error(ErrorCode::kDimensionMismatch, why.str());
  }
  return labels;
}

void SaveLabelMapPng(const std::string& path, const LabelMap& labels) {
  std::vector<std::uint16_t> samples(labels.labels().size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (labels.labels()[i] > 65535) {
      throw Error(ErrorCode::kInvalidArgument, "label id exceeds 16 bits");
    }
    samples[i] = static_cast<std::uint16_t>(labels.labels()[i]);
  }
  WritePngRaw(path, labels.width(), labels.height(), 1, samples);
}

void SaveLabelMapRle(const std::string& path, const LabelMap& labels) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << "SDMVS-RLE 1\n" << labels.width() << " " << labels.height() << "\n";
  const auto& v = labels.labels();
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    out << v[i] << " " << (j - i) << "\n";
    i = j;
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

DepthMapFile ToDepthMapFile(const HypothesisMap& map) {
  DepthMapFile f;
  f.width = map.width();
  f.height = map.height();
  const std::size_t n = map.hypotheses().size();
  f.depths.resize(n);
  f.normals.resize(3 * n);
  f.costs.assign(map.costs().begin(), map.costs().end());
  for (std::size_t i = 0; i < n; ++i) {
    const PlaneHypothesis& h = map.hypotheses()[i];
    f.depths[i] = static_cast<float>(h.depth);
    for (int c = 0; c < 3; ++c) f.normals[3 * i + c] = static_cast<float>(h.normal[c]);
  }
  return f;
}

HypothesisMap FromDepthMapFile(const DepthMapFile& file) {
  HypothesisMap map(file.width, file.height);
  for (int y = 0; y < file.height; ++y) {
    for (int x = 0; x < file.width; ++x) {
      const std::size_t i = map.index(x, y);
      PlaneHypothesis h;
      h.depth = file.depths[i];
      h.normal = Vector3d(file.normals[3 * i], file.normals[3 * i + 1],
                          file.normals[3 * i + 2]);
      map.Set(x, y, h, file.costs[i]);
    }
  }
  return map;
}

void WriteDepthMap(const std::string& path, const DepthMapFile& map) {
  const std::size_t n = static_cast<std::size_t>(map.width) * map.height;
  if (map.width <= 0 || map.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "depth map must not be empty");
  }
  if (map.depths.size() != n || map.normals.size() != 3 * n || map.costs.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "depth map arrays do not match its size");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out.write("SDMD", 4);
  WritePod(out, static_cast<std::uint32_t>(map.width));
  WritePod(out, static_cast<std::uint32_t>(map.height));
  WriteArray(out, map.depths);
  WriteArray(out, map.normals);
  WriteArray(out, map.costs);
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

DepthMapFile ReadDepthMap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4)) throw Error(ErrorCode::kTruncatedFile, path + ": no header");
  if (std::memcmp(magic, "SDMD", 4) != 0) {
    throw Error(ErrorCode::kMagicMismatch, path + " is not an SDMD depth map");
  }
  std::uint32_t w = 0, h = 0;
  if (!in.read(reinterpret_cast<char*>(&w), 4) || !in.read(reinterpret_cast<char*>(&h), 4)) {
    throw Error(ErrorCode::kTruncatedFile, path + ": header truncated");
  }
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) {
    throw Error(ErrorCode::kDecodeError, path + ": invalid dimensions");
  }
  DepthMapFile f;
  f.width = static_cast<int>(w);
  f.height = static_cast<int>(h);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  f.depths.resize(n);
  f.normals.resize(3 * n);
  f.costs.resize(n);
  auto read = [&](std::vector<float>& v) {
    if (!in.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(float)))) {
      throw Error(ErrorCode::kTruncatedFile, path + ": payload truncated");
    }
  };
  read(f.depths);
  read(f.normals);
  read(f.costs);
  return f;
}

void WritePly(const std::string& path, const FusedPointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property float nx\nproperty float ny\nproperty float nz\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  for (const FusedPoint& p : cloud.points) {
    for (int i = 0; i < 3; ++i) WritePod(out, p.position[i]);
    for (int i = 0; i < 3; ++i) WritePod(out, p.normal[i]);
    out.write(reinterpret_cast<const char*>(p.color.data()), 3);
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

AnchorSet LoadMatches(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path);
  AnchorSet out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    Anchor a;
    if (!(ls >> a.src_view)) continue;
    std::string rest;
    if (!(ls >> a.ref.x() >> a.ref.y() >> a.src.x() >> a.src.y()) || (ls >> rest)) {
      throw Error(ErrorCode::kParseError,
                  path + ":" + std::to_string(line_no) +
                      ": expected src_view_id x_ref y_ref x_src y_src");
    }
    out.push_back(a);
  }
  return out;
}

void SaveMatches(const std::string& path, const AnchorSet& anchors) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << std::setprecision(17);
  for (const Anchor& a : anchors) {
    out << a.src_view << " " << a.ref.x() << " " << a.ref.y() << " " << a.src.x()
        << " " << a.src.y() << "\n";
  }
}

std::string SceneManifest::Resolve(const std::string& relative) const {
  if (relative.empty() || fs::path(relative).is_absolute() || base_dir.empty()) {
    return relative;
  }
  return (fs::path(base_dir) / relative).string();
}

SceneManifest ParseManifest(const std::string& text, const std::string& base_dir,
                            const std::string& source) {
  SceneManifest m;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_range = false;
  std::vector<std::array<bool, 3>> have;  // K, R, C per view
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kParseError,
                source + ":" + std::to_string(line_no) + ": " + why);
  };
  auto numbers = [&](std::istringstream& ls, double* out, int count,
                     const std::string& key) {
    for (int i = 0; i < count; ++i) {
      if (!(ls >> out[i]) || !std::isfinite(out[i])) {
        fail(key + " needs " + std::to_string(count) + " numbers (field " +
             std::to_string(i + 1) + " missing or invalid)");
      }
    }
    std::string extra;
    if (ls >> extra) fail("unexpected trailing field '" + extra + "' after " + key);
  };
  auto rest = [&](std::istringstream& ls, const std::string& key) {
    std::string value;
    std::getline(ls >> std::ws, value);
    while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) {
      value.pop_back();
    }
    if (value.empty()) fail(key + " needs a value");
    return value;
  };
  auto current = [&](const std::string& key) -> ManifestView& {
    if (m.views.empty()) fail(key + " before the first image line");
    return m.views.back();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "depth_range") {
      double r[2];
      numbers(ls, r, 2, key);
      if (!(r[0] > 0.0) || !(r[0] < r[1])) fail("depth_range needs 0 < min < max");
      m.depth_min = r[0];
      m.depth_max = r[1];
      have_range = true;
    } else if (key == "output") {
      m.output = rest(ls, key);
    } else if (key == "config") {
      m.config = rest(ls, key);
    } else if (key == "image") {
      m.views.emplace_back();
      m.views.back().image = rest(ls, key);
      have.push_back({false, false, false});
    } else if (key == "K" || key == "R") {
      double v[9];
      numbers(ls, v, 9, key);
      Matrix3d M;
      M << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
      (key == "K" ? current(key).K : current(key).R) = M;
      have.back()[key == "K" ? 0 : 1] = true;
    } else if (key == "C") {
      double v[3];
      numbers(ls, v, 3, key);
      current(key).C = Vector3d(v[0], v[1], v[2]);
      have.back()[2] = true;
    } else if (key == "labels") {
      current(key).labels = rest(ls, key);
    } else if (key == "matches") {
      current(key).matches = rest(ls, key);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  line_no = 0;
  if (!have_range) fail("missing depth_range");
  if (m.views.size() < 2) fail("a scene needs at least two image blocks");
  for (std::size_t v = 0; v < m.views.size(); ++v) {
    for (int i = 0; i < 3; ++i) {
      if (!have[v][i]) {
        fail("view " + std::to_string(v) + " lacks its " + std::string(1, "KRC"[i]) +
             " line");
      }
    }
  }
  return m;
}

SceneManifest LoadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open manifest " + path);
  std::ostringstream text;
  text << in.rdbuf();
  SceneManifest m =
      ParseManifest(text.str(), fs::path(path).parent_path().string(), path);
  for (const ManifestView& v : m.views) {
    for (const std::string* f : {&v.image, &v.labels, &v.matches}) {
      if (!f->empty() && !fs::exists(m.Resolve(*f))) {
        throw Error(ErrorCode::kMissingFile, "missing file " + m.Resolve(*f));
      }
    }
  }
  if (!m.config.empty() && !fs::exists(m.Resolve(m.config))) {
    throw Error(ErrorCode::kMissingFile, "missing file " + m.Resolve(m.config));
  }
  return m;
}

std::string FormatManifest(const SceneManifest& m) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "depth_range " << m.depth_min << " " << m.depth_max << "\n";
  if (!m.output.empty()) out << "output " << m.output << "\n";
  if (!m.config.empty()) out << "config " << m.config << "\n";
  for (const ManifestView& v : m.views) {
    out << "\nimage " << v.image << "\n";
    for (const auto& [name, M] : {std::pair{"K", &v.K}, std::pair{"R", &v.R}}) {
      out << name;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out << " " << (*M)(r, c);
      }
      out << "\n";
    }
    out << "C " << v.C.x() << " " << v.C.y() << " " << v.C.z() << "\n";
    if (!v.labels.empty()) out << "labels " << v.labels << "\n";
    if (!v.matches.empty()) out << "matches " << v.matches << "\n";
  }
  return out.str();
}

void SaveManifest(const std::string& path, const SceneManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << FormatManifest(manifest);
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

SceneManifest ImportColmap(const std::string& model_dir,
                           const std::string& image_dir,
                           std::optional<std::pair<double, double>> depth_range) {
  const fs::path dir(model_dir);
  std::ifstream cams((dir / "cameras.txt").string());
  if (!cams) throw Error(ErrorCode::kMissingFile, "missing " + (dir / "cameras.txt").string());
  struct Intrinsics {
    Matrix3d K;
  };
  std::map<int, Intrinsics> cameras;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& file, const std::string& why) {
    throw Error(ErrorCode::kParseError, file + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(cams, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int id, w, h;
    std::string model;
    if (!(ls >> id >> model >> w >> h)) fail("cameras.txt", "malformed camera line");
    Matrix3d K = Matrix3d::Identity();
    double fx, fy, cx, cy;
    if (model == "PINHOLE") {
      if (!(ls >> fx >> fy >> cx >> cy)) fail("cameras.txt", "PINHOLE needs fx fy cx cy");
    } else if (model == "SIMPLE_PINHOLE") {
      if (!(ls >> fx >> cx >> cy)) fail("cameras.txt", "SIMPLE_PINHOLE needs f cx cy");
      fy = fx;
    } else {
      fail("cameras.txt", "unsupported camera model " + model);
    }
    // COLMAP puts pixel centers at +0.5; ours sit on integers.
    K << fx, 0, cx - 0.5, 0, fy, cy - 0.5, 0, 0, 1;
    cameras[id] = Intrinsics{K};
  }

  std::ifstream imgs((dir / "images.txt").string());
  if (!imgs) throw Error(ErrorCode::kMissingFile, "missing " + (dir / "images.txt").string());
  SceneManifest m;
  m.base_dir = image_dir;
  line_no = 0;
  bool expect_points = false;
  while (std::getline(imgs, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '#') continue;
    if (expect_points) {
      expect_points = false;
      continue;
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    int image_id, camera_id;
    double qw, qx, qy, qz, tx, ty, tz;
    std::string name;
    if (!(ls >> image_id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> camera_id >> name)) {
      fail("images.txt", "malformed image line");
    }
    const auto cam = cameras.find(camera_id);
    if (cam == cameras.end()) fail("images.txt", "unknown camera id");
    ManifestView v;
    v.image = name;
    v.K = cam->second.K;
    v.R = Eigen::Quaterniond(qw, qx, qy, qz).normalized().toRotationMatrix();
    v.C = -v.R.transpose() * Vector3d(tx, ty, tz);
    m.views.push_back(v);
    expect_points = true;
  }
  if (m.views.size() < 2) {
    throw Error(ErrorCode::kParseError, "images.txt lists fewer than two images");
  }

  if (depth_range) {
    m.depth_min = depth_range->first;
    m.depth_max = depth_range->second;
  } else {
    std::ifstream pts((dir / "points3D.txt").string());
    if (!pts) {
      throw Error(ErrorCode::kMissingFile,
                  "no depth range given and no points3D.txt in " + model_dir);
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    while (std::getline(pts, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      long long id;
      Vector3d X;
      if (!(ls >> id >> X.x() >> X.y() >> X.z())) continue;
      for (const ManifestView& v : m.views) {
        const double z = (v.R * (X - v.C)).z();
        if (z > 0.0) {
          lo = std::min(lo, z);
          hi = std::max(hi, z);
        }
      }
    }
    if (!(hi > 0.0)) throw Error(ErrorCode::kParseError, "points3D.txt has no usable points");
    m.depth_min = 0.8 * lo;
    m.depth_max = 1.2 * hi;
  }
  return m;
}

std::vector<ViewInput> LoadViews(const SceneManifest& manifest) {
  std::vector<ViewInput> views;
  for (std::size_t i = 0; i < manifest.views.size(); ++i) {
    const ManifestView& mv = manifest.views[i];
    ViewInput v;
    v.id = static_cast<int>(i);
    v.image = LoadImage(manifest.Resolve(mv.image));
    v.camera = Camera(mv.K, mv.R, mv.C, v.image.width(), v.image.height());
    if (!mv.labels.empty()) {
      v.labels = LoadLabelMap(manifest.Resolve(mv.labels), v.image.width(),
                              v.image.height());
    } else {
      v.labels = FallbackSegment(v.image);
    }
    if (!mv.matches.empty()) v.anchors = LoadMatches(manifest.Resolve(mv.matches));
    views.push_back(std::move(v));
  }
  return views;
}

}  // namespace sdmvs
