#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "robustnmf/errors.hpp"
#include "robustnmf/matrix.hpp"
#include "robustnmf/rng.hpp"

namespace robustnmf {

enum class NoiseKind { kNone, kBlock, kSalt };

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kNone: return "none";
    case NoiseKind::kBlock: return "block";
    case NoiseKind::kSalt: return "salt";
  }
  return "?";
}

inline NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "none") return NoiseKind::kNone;
  if (s == "block") return NoiseKind::kBlock;
  if (s == "salt") return NoiseKind::kSalt;
  throw std::invalid_argument("unknown noise kind: " + s);
}

struct CorruptionSpec {
  NoiseKind kind = NoiseKind::kNone;
  std::size_t block_size = 10;  // square block edge; block_w/block_h override
  std::size_t block_w = 0;
  std::size_t block_h = 0;
  double salt_fraction = 0.10;
  double intensity = 1.0;  // "white" for [0,1]-scaled images
  std::uint64_t seed = 0;
};

// Each column of x is one height x width image (row-major pixels). Block
// noise places one intensity-valued rectangle per image at a uniformly
// random position; salt noise sets floor(salt_fraction * h * w) distinct
// random pixels per image. Every image uses a sub-seed mixed from
// (spec.seed, image index), so masks are reproducible and independent of
// evaluation order.
inline DenseMatrix corrupt(const DenseMatrix& x, std::size_t height, std::size_t width,
                           const CorruptionSpec& spec) {
  if (height * width != x.rows()) {
    throw ShapeError("corrupt: matrix rows " + std::to_string(x.rows()) + " != image size " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  if (!(spec.salt_fraction >= 0.0 && spec.salt_fraction <= 1.0)) {
    throw std::invalid_argument("corrupt: salt_fraction must be in [0, 1]");
  }
  if (!std::isfinite(spec.intensity) || spec.intensity < 0.0) {
    throw std::invalid_argument("corrupt: intensity must be finite and >= 0");
  }

  DenseMatrix out = x;
  if (spec.kind == NoiseKind::kNone) return out;

  const std::size_t n_images = x.cols();
  if (spec.kind == NoiseKind::kBlock) {
    const std::size_t bw = spec.block_w ? spec.block_w : spec.block_size;
    const std::size_t bh = spec.block_h ? spec.block_h : spec.block_size;
    if (bw < 1 || bh < 1 || bw > width || bh > height) {
      throw std::invalid_argument("corrupt: block does not fit the image");
    }
    for (std::size_t img = 0; img < n_images; ++img) {
      Rng rng(mix_seed(spec.seed, seed_tag::kCorruption ^ (img + 1)));
      const std::size_t top = static_cast<std::size_t>(rng.next_index(height - bh + 1));
      const std::size_t left = static_cast<std::size_t>(rng.next_index(width - bw + 1));
      for (std::size_t y = top; y < top + bh; ++y) {
        for (std::size_t xpix = left; xpix < left + bw; ++xpix) {
          out(y * width + xpix, img) = spec.intensity;
        }
      }
    }
    return out;
  }

  // salt
  const std::size_t n_pixels = height * width;
  const std::size_t n_corrupt =
      static_cast<std::size_t>(std::floor(spec.salt_fraction * static_cast<double>(n_pixels)));
  if (n_corrupt == 0) return out;
  std::vector<std::uint32_t> idx(n_pixels);
  for (std::size_t img = 0; img < n_images; ++img) {
    Rng rng(mix_seed(spec.seed, seed_tag::kCorruption ^ (img + 1)));
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t t = 0; t < n_corrupt; ++t) {  // partial Fisher-Yates
      const std::size_t j = t + static_cast<std::size_t>(rng.next_index(n_pixels - t));
      std::swap(idx[t], idx[j]);
      out(idx[t], img) = spec.intensity;
    }
  }
  return out;
}

}  // namespace robustnmf
