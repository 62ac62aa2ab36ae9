#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <filesystem>
#include <string>
#include <vector>

namespace fraclab {

// Shortest round-trip decimal form, '.' separator regardless of locale; inf/nan spelled out.
std::string fmt_num(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  CsvTable& row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  // A '# config_digest <hex>' comment line, then the header and the rows.
  std::string str(const std::string& digest) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct OutputFile {
  std::string path;  // relative to the output root
  std::string bytes;
};

// Little-endian float64, row-major.
std::string binary_dump(const Eigen::MatrixXd& m);
// One "row col value" line per stored entry, preceded by "rows cols nnz".
std::string coo_text(const Eigen::SparseMatrix<double>& m);

// Comma-separated numbers, one row per node; '#' lines ignored.
Eigen::MatrixXd read_field_csv(const std::filesystem::path& path);

}  // namespace fraclab
