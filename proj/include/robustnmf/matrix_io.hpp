#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "robustnmf/errors.hpp"
#include "robustnmf/matrix.hpp"

namespace robustnmf {

// Two on-disk matrix formats:
//   CSV  — one row per line, '.' decimal separator, no header.
//   RFM1 — magic "RFM1", u64 rows, u64 cols, then rows*cols float64,
//          row-major, little-endian. Round-trips bitwise.

namespace detail {

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    T out;
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
    return out;
  }
}

inline double parse_csv_number(const std::string& token, const std::filesystem::path& path) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw DataError("CSV parse error in " + path.string() + ": '" + token + "'");
  }
  if (!std::isfinite(v)) {
    throw DataError("CSV non-finite entry in " + path.string() + ": '" + token + "'");
  }
  return v;
}

}  // namespace detail

inline void save_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  char buf[40];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j) os << ',';
      os << buf;
    }
    os << '\n';
  }
  if (!os) throw DataError("write failed: " + path.string());
}

inline DenseMatrix load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path.string());
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t row_cols = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = line.find(',', pos);
      const std::size_t end = (comma == std::string::npos) ? line.size() : comma;
      data.push_back(detail::parse_csv_number(line.substr(pos, end - pos), path));
      ++row_cols;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (rows == 0) {
      cols = row_cols;
    } else if (row_cols != cols) {
      throw DataError("CSV ragged rows in " + path.string());
    }
    ++rows;
  }
  if (rows == 0) throw DataError("CSV empty file: " + path.string());
  return DenseMatrix::from_data(rows, cols, std::move(data));
}

inline void save_matrix_rfm1(const std::filesystem::path& path, const DenseMatrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os.write("RFM1", 4);
  const std::uint64_t dims[2] = {detail::byteswap_if_big<std::uint64_t>(m.rows()),
                                 detail::byteswap_if_big<std::uint64_t>(m.cols())};
  os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(double)));
  } else {
    for (double v : m.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      bits = detail::byteswap_if_big(bits);
      os.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
  if (!os) throw DataError("write failed: " + path.string());
}

inline DenseMatrix load_matrix_rfm1(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "RFM1", 4) != 0) {
    throw DataError("not an RFM1 file: " + path.string());
  }
  std::uint64_t dims[2];
  is.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!is) throw DataError("RFM1 truncated header: " + path.string());
  const std::uint64_t rows = detail::byteswap_if_big(dims[0]);
  const std::uint64_t cols = detail::byteswap_if_big(dims[1]);
  if (rows < 1 || cols < 1 || rows > (1ULL << 32) || cols > (1ULL << 32)) {
    throw DataError("RFM1 implausible dimensions: " + path.string());
  }
  std::vector<double> data(rows * cols);
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!is) throw DataError("RFM1 truncated payload: " + path.string());
  if constexpr (std::endian::native != std::endian::little) {
    for (double& v : data) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      bits = detail::byteswap_if_big(bits);
      std::memcpy(&v, &bits, sizeof(bits));
    }
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw DataError("RFM1 non-finite entry: " + path.string());
  }
  return DenseMatrix::from_data(rows, cols, std::move(data));
}

inline void save_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
  if (path.extension() == ".csv") {
    save_matrix_csv(path, m);
  } else {
    save_matrix_rfm1(path, m);
  }
}

// Auto-detects RFM1 by magic; anything else is parsed as CSV.
inline DenseMatrix load_matrix(const std::filesystem::path& path, bool require_nonneg = false) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError("cannot open: " + path.string());
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  probe.close();
  DenseMatrix m = (std::memcmp(magic, "RFM1", 4) == 0) ? load_matrix_rfm1(path)
                                                       : load_matrix_csv(path);
  if (require_nonneg) {
    for (double v : m.values()) {
      if (v < 0.0) throw DataError("negative entry in nonnegative matrix: " + path.string());
    }
  }
  return m;
}

}  // namespace robustnmf
