#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "robustnmf/errors.hpp"
#include "robustnmf/matrix.hpp"
#include "robustnmf/metrics.hpp"

namespace robustnmf {

namespace fs = std::filesystem;

enum class DatasetLayout { kOrl, kYaleb, kFlat };

inline const char* to_string(DatasetLayout l) {
  switch (l) {
    case DatasetLayout::kOrl: return "orl";
    case DatasetLayout::kYaleb: return "yaleb";
    case DatasetLayout::kFlat: return "flat";
  }
  return "?";
}

inline DatasetLayout parse_layout(const std::string& s) {
  if (s == "orl") return DatasetLayout::kOrl;
  if (s == "yaleb") return DatasetLayout::kYaleb;
  if (s == "flat") return DatasetLayout::kFlat;
  throw std::invalid_argument("unknown dataset layout: " + s);
}

// Grayscale image scaled into [0,1], row-major pixels.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;
};

// Images as columns: x is (height*width) x n_images, one subject id per image.
struct Dataset {
  DenseMatrix x;
  LabelVector labels;
  std::size_t image_height = 0;
  std::size_t image_width = 0;
  std::string name;

  std::size_t n_images() const { return labels.size(); }
  std::size_t n_subjects() const {
    return labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  }
};

namespace detail {

// PGM header tokens may be separated by whitespace and '#' comments.
inline std::string next_pnm_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

inline std::size_t parse_pnm_size(const std::string& tok, const fs::path& path) {
  if (tok.empty() || tok.size() > 9 || tok.find_first_not_of("0123456789") != std::string::npos) {
    throw DataError("PGM bad header token '" + tok + "' in " + path.string());
  }
  return static_cast<std::size_t>(std::stoull(tok));
}

}  // namespace detail

// P2 (ASCII) and P5 (binary) portable graymaps; 8-bit values scale as v/255,
// 16-bit as v/maxval.
inline GrayImage load_pgm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  const std::string magic = detail::next_pnm_token(is);
  if (magic != "P2" && magic != "P5") {
    throw DataError("not a PGM (P2/P5) file: " + path.string());
  }
  GrayImage img;
  img.width = detail::parse_pnm_size(detail::next_pnm_token(is), path);
  img.height = detail::parse_pnm_size(detail::next_pnm_token(is), path);
  const std::size_t maxval = detail::parse_pnm_size(detail::next_pnm_token(is), path);
  if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 65535) {
    throw DataError("PGM bad dimensions/maxval: " + path.string());
  }
  const std::size_t n = img.width * img.height;
  img.pixels.resize(n);
  const double scale = 1.0 / static_cast<double>(maxval);

  if (magic == "P2") {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string tok = detail::next_pnm_token(is);
      const std::size_t v = detail::parse_pnm_size(tok, path);
      if (v > maxval) throw DataError("PGM value out of range: " + path.string());
      img.pixels[i] = static_cast<double>(v) * scale;
    }
    return img;
  }

  // P5: single whitespace after maxval, then raw samples
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(n * bytes_per);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw DataError("PGM truncated pixel data: " + path.string());
  if (bytes_per == 1) {
    for (std::size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<double>(raw[i]) * scale;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t v = (static_cast<std::size_t>(raw[2 * i]) << 8) | raw[2 * i + 1];
      img.pixels[i] = static_cast<double>(v) * scale;
    }
  }
  return img;
}

// 8-bit binary PGM; values are clamped into [0,1] before quantizing.
inline void save_pgm(const fs::path& path, const GrayImage& img) {
  if (img.pixels.size() != img.width * img.height) throw ShapeError("save_pgm: pixel count");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw DataError("write failed: " + path.string());
}

inline GrayImage column_image(const DenseMatrix& x, std::size_t col, std::size_t height,
                              std::size_t width) {
  if (height * width != x.rows() || col >= x.cols()) throw ShapeError("column_image: shape");
  GrayImage img{width, height, std::vector<double>(height * width)};
  for (std::size_t p = 0; p < img.pixels.size(); ++p) img.pixels[p] = x(p, col);
  return img;
}

namespace detail {

inline bool has_pgm_extension(const fs::path& p) {
  const std::string e = p.extension().string();
  return e == ".pgm" || e == ".PGM";
}

inline std::vector<fs::path> sorted_pgm_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_pgm_extension(entry.path())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

}  // namespace detail

// Loads a directory of grayscale face images into the columns-as-images
// layout. orl/yaleb: one subfolder per subject (ORL ships as s1..s40);
// flat: files named <label>_<anything>.pgm in one directory. Ordering is
// lexicographic by subject folder then filename, so the column order is
// platform-independent.
inline Dataset load_image_dir(const fs::path& root, DatasetLayout layout) {
  if (!fs::is_directory(root)) throw DataError("not a directory: " + root.string());

  Dataset ds;
  ds.name = root.filename().string();
  std::vector<std::pair<int, fs::path>> files;  // (label, path)

  if (layout == DatasetLayout::kFlat) {
    std::map<std::string, std::vector<fs::path>> by_label;
    for (const auto& entry : fs::directory_iterator(root)) {
      if (!entry.is_regular_file() || !detail::has_pgm_extension(entry.path())) continue;
      const std::string stem = entry.path().stem().string();
      const std::size_t us = stem.find('_');
      if (us == std::string::npos || us == 0) {
        throw DataError("flat layout expects <label>_<name>.pgm: " + entry.path().string());
      }
      by_label[stem.substr(0, us)].push_back(entry.path());
    }
    int label = 0;
    for (auto& [key, paths] : by_label) {
      std::sort(paths.begin(), paths.end(),
                [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
      for (const auto& p : paths) files.emplace_back(label, p);
      ++label;
    }
  } else {
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory()) subdirs.push_back(entry.path());
    }
    std::sort(subdirs.begin(), subdirs.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    int label = 0;
    for (const auto& dir : subdirs) {
      const auto paths = detail::sorted_pgm_files(dir);
      if (paths.empty()) continue;
      for (const auto& p : paths) files.emplace_back(label, p);
      ++label;
    }
  }

  if (files.empty()) throw DataError("no PGM images found under: " + root.string());

  std::vector<double> data;
  for (std::size_t j = 0; j < files.size(); ++j) {
    const GrayImage img = load_pgm(files[j].second);
    if (j == 0) {
      ds.image_height = img.height;
      ds.image_width = img.width;
      data.assign(img.pixels.size() * files.size(), 0.0);
    } else if (img.height != ds.image_height || img.width != ds.image_width) {
      throw DataError("inconsistent image dimensions: " + files[j].second.string());
    }
    for (std::size_t p = 0; p < img.pixels.size(); ++p) {
      data[p * files.size() + j] = img.pixels[p];
    }
    ds.labels.push_back(files[j].first);
  }
  ds.x = DenseMatrix::from_data(ds.image_height * ds.image_width, files.size(), std::move(data));
  return ds;
}

}  // namespace robustnmf
