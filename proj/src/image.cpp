/*
 * Copyright 2026 The InCTRL-cpp Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "inctrl/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>

#include <png.h>

#include "inctrl/error.hpp"
#include "inctrl/io.hpp"

namespace inctrl {
namespace {

constexpr char kModule[] = "encoder";

bool IsPng(std::span<const std::byte> bytes) {
  static constexpr unsigned char kSig[8] = {0x89, 'P', 'N', 'G',
                                            '\r', '\n', 0x1A, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kSig, 8) == 0;
}

RawImage DecodePng(std::span<const std::byte> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    Fail(ErrorKind::kInvalidInput, kModule,
         std::string("PNG decode failed: ") + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    Fail(ErrorKind::kInvalidInput, kModule,
         std::string("PNG decode failed: ") + image.message);
  }
  RawImage out = MakeRawImage(static_cast<int>(image.width),
                              static_cast<int>(image.height), color ? 3 : 1);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = static_cast<float>(buffer[i]) / 255.0f;
  }
  return out;
}

class PnmReader {
 public:
  explicit PnmReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  RawImage Decode() {
    if (bytes_.size() < 2 || Char(0) != 'P') {
      Fail(ErrorKind::kInvalidInput, kModule, "unrecognized image format");
    }
    const char kind = Char(1);
    pos_ = 2;
    const bool ascii = kind == '2' || kind == '3';
    const int channels = (kind == '3' || kind == '6') ? 3 : 1;
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
      Fail(ErrorKind::kInvalidInput, kModule, "unsupported PNM variant");
    }
    const int width = NextInt();
    const int height = NextInt();
    const int maxval = NextInt();
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
      Fail(ErrorKind::kInvalidInput, kModule, "bad PNM header");
    }
    RawImage out = MakeRawImage(width, height, channels);
    if (!ascii) ++pos_;  // single whitespace after maxval
    const int sample_bytes = maxval > 255 ? 2 : 1;
    for (float& s : out.samples) {
      int v;
      if (ascii) {
        v = NextInt();
      } else {
        if (pos_ + sample_bytes > bytes_.size()) {
          Fail(ErrorKind::kInvalidInput, kModule, "truncated PNM data");
        }
        v = static_cast<unsigned char>(Char(pos_));
        if (sample_bytes == 2) {
          v = (v << 8) | static_cast<unsigned char>(Char(pos_ + 1));
        }
        pos_ += sample_bytes;
      }
      s = static_cast<float>(v) / static_cast<float>(maxval);
    }
    return out;
  }

 private:
  char Char(std::size_t i) const { return static_cast<char>(bytes_[i]); }

  int NextInt() {
    while (pos_ < bytes_.size()) {
      const char c = Char(pos_);
      if (c == '#') {
        while (pos_ < bytes_.size() && Char(pos_) != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ >= bytes_.size() ||
        !std::isdigit(static_cast<unsigned char>(Char(pos_)))) {
      Fail(ErrorKind::kInvalidInput, kModule, "malformed PNM");
    }
    long v = 0;
    while (pos_ < bytes_.size() &&
           std::isdigit(static_cast<unsigned char>(Char(pos_)))) {
      v = v * 10 + (Char(pos_) - '0');
      if (v > 1 << 24) Fail(ErrorKind::kInvalidInput, kModule, "PNM overflow");
      ++pos_;
    }
    return static_cast<int>(v);
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

double BicubicKernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

struct Taps {
  int first = 0;
  std::vector<double> weights;
};

std::vector<Taps> ResampleTaps(int in_size, int out_size) {
  const double scale = static_cast<double>(in_size) / out_size;
  const double filter_scale = std::max(scale, 1.0);
  const double support = 2.0 * filter_scale;
  std::vector<Taps> taps(out_size);
  for (int o = 0; o < out_size; ++o) {
    const double center = (o + 0.5) * scale;
    const int lo = std::max(static_cast<int>(center - support + 0.5), 0);
    const int hi = std::min(static_cast<int>(center + support + 0.5), in_size);
    Taps& t = taps[o];
    t.first = lo;
    double total = 0.0;
    for (int x = lo; x < hi; ++x) {
      const double w = BicubicKernel((x - center + 0.5) / filter_scale);
      t.weights.push_back(w);
      total += w;
    }
    if (total != 0.0) {
      for (double& w : t.weights) w /= total;
    }
  }
  return taps;
}

}  // namespace

RawImage MakeRawImage(int width, int height, int channels, float fill) {
  RawImage img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.samples.assign(static_cast<std::size_t>(width) * height * channels, fill);
  return img;
}

RawImage ReadImage(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  RawImage img = IsPng(bytes) ? DecodePng(bytes) : PnmReader(bytes).Decode();
  img.source_digest = Sha256(bytes);
  return img;
}

void WritePng(const RawImage& image, const std::filesystem::path& path) {
  if (image.channels != 1 && image.channels != 3) {
    Fail(ErrorKind::kInvalidInput, kModule, "PNG output needs 1 or 3 channels");
  }
  std::vector<png_byte> pixels(image.samples.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const float v = std::clamp(image.samples[i], 0.0f, 1.0f);
    pixels[i] = static_cast<png_byte>(std::lround(v * 255.0f));
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0,
                                 nullptr)) {
    Fail(ErrorKind::kPersistence, kModule,
         std::string("PNG encode failed: ") + png.message);
  }
  std::vector<std::byte> encoded(size);
  if (!png_image_write_to_memory(&png, encoded.data(), &size, 0, pixels.data(),
                                 0, nullptr)) {
    Fail(ErrorKind::kPersistence, kModule,
         std::string("PNG encode failed: ") + png.message);
  }
  encoded.resize(size);
  WriteFileAtomic(path, encoded);
}

RawImage ResizeBicubic(const RawImage& image, int width, int height) {
  if (width <= 0 || height <= 0) {
    Fail(ErrorKind::kInvalidInput, kModule, "resize target must be positive");
  }
  if (width == image.width && height == image.height) return image;
  const int c = image.channels;

  // Horizontal pass then vertical pass, clipping like an 8-bit pipeline would.
  const auto htaps = ResampleTaps(image.width, width);
  RawImage mid = MakeRawImage(width, image.height, c);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Taps& t = htaps[x];
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.weights.size(); ++k) {
          acc += t.weights[k] * image.at(y, t.first + static_cast<int>(k), ch);
        }
        mid.at(y, x, ch) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  const auto vtaps = ResampleTaps(image.height, height);
  RawImage out = MakeRawImage(width, height, c);
  for (int y = 0; y < height; ++y) {
    const Taps& t = vtaps[y];
    for (int x = 0; x < width; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.weights.size(); ++k) {
          acc += t.weights[k] * mid.at(t.first + static_cast<int>(k), x, ch);
        }
        out.at(y, x, ch) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  out.source_digest = image.source_digest;
  return out;
}

Digest ImageTensor::ContentDigest() const {
  std::vector<std::byte> bytes;
  for (const auto& ch : channels) {
    const auto* p = reinterpret_cast<const std::byte*>(ch.data());
    bytes.insert(bytes.end(), p, p + ch.size() * sizeof(float));
  }
  return Sha256(bytes);
}

ImageTensor PreprocessImage(const RawImage& raw,
                            const PreprocessConfig& config) {
  if (raw.width <= 0 || raw.height <= 0) {
    Fail(ErrorKind::kInvalidInput, kModule, "zero-sized image");
  }
  if (raw.channels != 1 && raw.channels != 3) {
    Fail(ErrorKind::kInvalidInput, kModule,
         "expected 1 or 3 channels, got " + std::to_string(raw.channels));
  }
  if (raw.samples.size() !=
      static_cast<std::size_t>(raw.width) * raw.height * raw.channels) {
    Fail(ErrorKind::kInvalidInput, kModule, "sample buffer size mismatch");
  }
  for (float s : raw.samples) {
    if (!std::isfinite(s)) {
      Fail(ErrorKind::kInvalidInput, kModule, "non-finite pixel value");
    }
  }
  const int res = config.resolution;
  if (res <= 0) Fail(ErrorKind::kInvalidInput, kModule, "resolution must be > 0");
  for (double s : config.std) {
    if (!(s > 0.0)) Fail(ErrorKind::kInvalidInput, kModule, "std must be > 0");
  }

  // Shortest side to `res`, then center crop.
  int rw = res;
  int rh = res;
  if (raw.width < raw.height) {
    rh = static_cast<int>(static_cast<long>(raw.height) * res / raw.width);
  } else if (raw.height < raw.width) {
    rw = static_cast<int>(static_cast<long>(raw.width) * res / raw.height);
  }
  const RawImage resized = ResizeBicubic(raw, rw, rh);
  const int x0 = (rw - res) / 2;
  const int y0 = (rh - res) / 2;

  ImageTensor t;
  t.resolution = res;
  t.source_digest = raw.source_digest;
  for (int c = 0; c < 3; ++c) {
    const int src_c = raw.channels == 1 ? 0 : c;
    const float mean = static_cast<float>(config.mean[c]);
    const float std = static_cast<float>(config.std[c]);
    Eigen::MatrixXf& ch = t.channels[c];
    ch.resize(res, res);
    for (int y = 0; y < res; ++y) {
      for (int x = 0; x < res; ++x) {
        ch(y, x) = (resized.at(y0 + y, x0 + x, src_c) - mean) / std;
      }
    }
  }
  return t;
}

ImageTensor LoadImageTensor(const std::filesystem::path& path,
                            const PreprocessConfig& config) {
  return PreprocessImage(ReadImage(path), config);
}

}  // namespace inctrl
