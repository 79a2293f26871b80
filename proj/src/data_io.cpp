#include "rnmf/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "binary matrix I/O assumes a little-endian host");

namespace rnmf {

namespace {

void throw_on_nonfinite(const Matrix& a, const std::string& context) {
  if (a.allFinite()) return;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      if (!std::isfinite(a(i, j))) {
        throw DataError(context + ": non-finite value at (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
      }
}

void write_u64(std::ofstream& f, std::uint64_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& f) {
  std::uint64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_bin(const std::string& path, const Matrix& a) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(kBinMagic, sizeof(kBinMagic));
  write_u64(f, static_cast<std::uint64_t>(a.rows()));
  write_u64(f, static_cast<std::uint64_t>(a.cols()));
  f.write(reinterpret_cast<const char*>(a.data()),
          static_cast<std::streamsize>(sizeof(double)) * a.size());
  if (!f) throw IoError("short write to '" + path + "'");
}

void write_csv(const std::string& path, const Matrix& a) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  char cell[40];
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      std::snprintf(cell, sizeof(cell), "%.17g", a(i, j));
      if (j) f.put(',');
      f << cell;
    }
    f.put('\n');
  }
  if (!f) throw IoError("short write to '" + path + "'");
}

Matrix read_bin(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");

  char magic[sizeof(kBinMagic)] = {};
  f.read(magic, sizeof(magic));
  if (f.gcount() != sizeof(magic) || std::memcmp(magic, kBinMagic, sizeof(magic)) != 0) {
    throw DataError("'" + path + "': bad magic at byte 0 (expected \"RNMFMAT1\")");
  }
  const std::uint64_t rows = read_u64(f);
  const std::uint64_t cols = read_u64(f);
  if (!f) throw DataError("'" + path + "': truncated header, file ends before byte 24");
  if (rows > (1ull << 40) || cols > (1ull << 40) ||
      (cols != 0 && rows > std::numeric_limits<std::uint64_t>::max() / 8 / std::max<std::uint64_t>(cols, 1))) {
    throw DataError("'" + path + "': implausible dimensions " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  }

  Matrix a(static_cast<Index>(rows), static_cast<Index>(cols));
  const std::uint64_t expected = rows * cols * sizeof(double);
  f.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(expected));
  const std::uint64_t got = static_cast<std::uint64_t>(f.gcount());
  if (got != expected) {
    throw DataError("'" + path + "': truncated payload, expected " + std::to_string(expected) +
                    " bytes after the header, got " + std::to_string(got) + " (file ends at byte " +
                    std::to_string(kBinHeaderBytes + got) + ")");
  }
  if (f.get() != std::ifstream::traits_type::eof()) {
    throw DataError("'" + path + "': trailing data after byte " +
                    std::to_string(kBinHeaderBytes + expected));
  }
  throw_on_nonfinite(a, "'" + path + "'");
  return a;
}

Matrix read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");

  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && f.peek() == std::ifstream::traits_type::eof()) break;

    Index cells = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                           : comma - pos);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size()) {
        throw DataError("'" + path + "': line " + std::to_string(line_no) + ", column " +
                        std::to_string(cells + 1) + ": cannot parse cell '" + cell + "'");
      }
      values.push_back(v);
      ++cells;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cols < 0) {
      cols = cells;
    } else if (cells != cols) {
      throw DataError("'" + path + "': line " + std::to_string(line_no) + ": expected " +
                      std::to_string(cols) + " columns, got " + std::to_string(cells) +
                      " (ragged row)");
    }
    ++rows;
  }
  if (rows == 0) throw DataError("'" + path + "': empty CSV file");

  Matrix a(rows, cols);
  std::copy(values.begin(), values.end(), a.data());  // row-major on both sides
  throw_on_nonfinite(a, "'" + path + "'");
  return a;
}

}  // namespace

MatrixFormat format_from_extension(const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".csv") return MatrixFormat::Csv;
  if (ext == ".bin") return MatrixFormat::Bin;
  throw ParameterError("cannot infer matrix format from '" + path + "' (expected .csv or .bin)");
}

void write_matrix(const std::string& path, const Matrix& a, MatrixFormat format) {
  throw_on_nonfinite(a, "write_matrix");
  if (format == MatrixFormat::Bin) {
    write_bin(path, a);
  } else {
    write_csv(path, a);
  }
}

Matrix read_matrix(const std::string& path, MatrixFormat format) {
  return format == MatrixFormat::Bin ? read_bin(path) : read_csv(path);
}

Matrix synth_lowrank(Index rows, Index cols, Index rank, double noise, std::uint64_t seed) {
  if (rank < 1 || rank > std::min(rows, cols)) {
    throw ParameterError("synth_lowrank: rank " + std::to_string(rank) + " out of range [1, " +
                         std::to_string(std::min(rows, cols)) + "]");
  }
  if (noise < 0.0) throw ParameterError("synth_lowrank: noise must be nonnegative");
  Rng rng(seed);
  const Matrix g1 = gaussian_matrix(rows, rank, rng).cwiseMax(0.0);
  const Matrix g2 = gaussian_matrix(rank, cols, rng).cwiseMax(0.0);
  Matrix x = g1 * g2;
  if (noise > 0.0) x += noise * gaussian_matrix(rows, cols, rng).cwiseMax(0.0);
  return x;
}

FileColumnSource::FileColumnSource(const std::string& path)
    : path_(path), stream_(path, std::ios::binary) {
  if (!stream_) throw IoError("cannot open '" + path + "'");

  char magic[sizeof(kBinMagic)] = {};
  stream_.read(magic, sizeof(magic));
  if (stream_.gcount() != sizeof(magic) || std::memcmp(magic, kBinMagic, sizeof(magic)) != 0) {
    throw DataError("'" + path + "': bad magic at byte 0 (expected \"RNMFMAT1\")");
  }
  const std::uint64_t rows = read_u64(stream_);
  const std::uint64_t cols = read_u64(stream_);
  if (!stream_) throw DataError("'" + path + "': truncated header, file ends before byte 24");

  stream_.seekg(0, std::ios::end);
  const std::uint64_t size = static_cast<std::uint64_t>(stream_.tellg());
  const std::uint64_t expected = kBinHeaderBytes + rows * cols * sizeof(double);
  if (size != expected) {
    throw DataError("'" + path + "': file is " + std::to_string(size) + " bytes, expected " +
                    std::to_string(expected) + " for a " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " matrix");
  }
  rows_ = static_cast<Index>(rows);
  cols_ = static_cast<Index>(cols);
}

void FileColumnSource::read_columns(Index first, Index count, Eigen::Ref<Matrix> dst) const {
  check_read_range(*this, first, count, dst);
  const std::streamsize row_bytes = static_cast<std::streamsize>(sizeof(double)) * count;
  for (Index i = 0; i < rows_; ++i) {
    const std::uint64_t offset =
        kBinHeaderBytes + (static_cast<std::uint64_t>(i) * cols_ + first) * sizeof(double);
    stream_.seekg(static_cast<std::streamoff>(offset));
    stream_.read(reinterpret_cast<char*>(dst.data() + i * dst.outerStride()), row_bytes);
    if (!stream_) {
      throw IoError("'" + path_ + "': read failed for columns [" + std::to_string(first) + ", " +
                    std::to_string(first + count) + ") at row " + std::to_string(i));
    }
  }
}

}  // namespace rnmf
