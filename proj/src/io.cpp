#include "fraclab/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fraclab/errors.hpp"

namespace fraclab {

std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw std::logic_error("csv: row width does not match header");
  rows_.push_back(std::move(cells));
  return *this;
}

std::string CsvTable::str(const std::string& digest) const {
  std::string out = "# config_digest " + digest + "\n";
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

std::string binary_dump(const Eigen::MatrixXd& m) {
  static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");
  std::string out(static_cast<std::size_t>(m.size()) * sizeof(double), '\0');
  std::size_t at = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      std::memcpy(out.data() + at, &v, sizeof v);
      at += sizeof v;
    }
  return out;
}

std::string coo_text(const Eigen::SparseMatrix<double>& m) {
  std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + " " + std::to_string(m.nonZeros()) + "\n";
  // Row-major order for a stable listing.
  Eigen::SparseMatrix<double, Eigen::RowMajor> r(m);
  for (Eigen::Index i = 0; i < r.outerSize(); ++i)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(r, i); it; ++it)
      out += std::to_string(it.row()) + " " + std::to_string(it.col()) + " " + fmt_num(it.value()) + "\n";
  return out;
}

Eigen::MatrixXd read_field_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open field file '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t next = std::min(line.find(',', pos), line.size());
      std::string cell = line.substr(pos, next - pos);
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      while (!cell.empty() && cell.back() == ' ') cell.pop_back();
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw InputError(path.string() + ":" + std::to_string(lineno) + ": not a finite number: '" + cell + "'");
      vals.push_back(v);
      pos = next + 1;
    }
    if (!rows.empty() && vals.size() != rows[0].size())
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw InputError("field file '" + path.string() + "' holds no data");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

}  // namespace fraclab
