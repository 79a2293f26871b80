#pragma once

#include "rnmf/sketch.hpp"

#include <fstream>
#include <string>

namespace rnmf {

enum class MatrixFormat { Csv, Bin };

// Binary layout: 8-byte magic, rows and cols as little-endian u64, then
// rows*cols real64 values little-endian in row-major order.
inline constexpr char kBinMagic[8] = {'R', 'N', 'M', 'F', 'M', 'A', 'T', '1'};
inline constexpr std::size_t kBinHeaderBytes = 24;

/// ".csv" or ".bin"; anything else is a ParameterError.
MatrixFormat format_from_extension(const std::string& path);

/// CSV uses '.' decimals, ',' delimiters, '\n' rows, no header, 17 significant
/// digits (round-trips doubles exactly). Binary round-trips bit-identically.
void write_matrix(const std::string& path, const Matrix& a, MatrixFormat format);
Matrix read_matrix(const std::string& path, MatrixFormat format);

/// Nonnegative test matrix G1+ * G2+ where G1 (rows x rank) and G2 (rank x cols)
/// are standard Gaussian with negative entries set to zero, plus an elementwise
/// noise * G+ perturbation when noise > 0. Deterministic in the seed.
Matrix synth_lowrank(Index rows, Index cols, Index rank, double noise, std::uint64_t seed);

/// ColumnSource over a binary matrix file. The header is validated up front;
/// column blocks are assembled with one strided read per row. Single-consumer.
class FileColumnSource final : public ColumnSource {
 public:
  explicit FileColumnSource(const std::string& path);
  Index rows() const override { return rows_; }
  Index cols() const override { return cols_; }
  void read_columns(Index first, Index count, Eigen::Ref<Matrix> dst) const override;

 private:
  std::string path_;
  mutable std::ifstream stream_;
  Index rows_ = 0;
  Index cols_ = 0;
};

}  // namespace rnmf
