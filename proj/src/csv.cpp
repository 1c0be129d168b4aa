#include "mrccc/csv.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <utility>

#include "mrccc/errors.hpp"

namespace mrccc {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

// Column name prefixes in the dataset file, e.g. g1, g2, ...
bool has_index_suffix(const std::string& name, char prefix) {
  if (name.size() < 2 || name[0] != prefix) return false;
  for (std::size_t i = 1; i < name.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
  }
  return true;
}

}  // namespace

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DataError(source + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) throw DataError(source + ": empty file (no header)");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in, path.string());
}

double parse_cell(const CsvTable& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (s.empty() || end != begin + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw DataError(t.source + ":" + std::to_string(t.line_numbers[row]) +
                    ": column '" + t.header[col] + "' is not a finite number ('" +
                    s + "')");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"") != std::string::npos) {
      out << '"';
      for (char c : f) out << (c == '"' ? std::string("\"\"") : std::string(1, c));
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& d,
                       const std::vector<std::string>& donors) {
  d.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<std::string> header{"donor"};
  for (Eigen::Index j = 0; j < d.p_G(); ++j) header.push_back("g" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < d.p_H(); ++j) header.push_back("h" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < d.p_V(); ++j) header.push_back("v" + std::to_string(j + 1));
  header.insert(header.end(), {"x", "z", "y"});
  write_csv_row(out, header);
  std::vector<std::string> row;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    row.clear();
    row.push_back(donors.empty() ? "d" + std::to_string(i + 1)
                                 : donors.at(static_cast<std::size_t>(i)));
    for (Eigen::Index j = 0; j < d.p_G(); ++j) row.push_back(format_double(d.G(i, j)));
    for (Eigen::Index j = 0; j < d.p_H(); ++j) row.push_back(format_double(d.H(i, j)));
    for (Eigen::Index j = 0; j < d.p_V(); ++j) row.push_back(format_double(d.V(i, j)));
    row.push_back(format_double(d.x(i)));
    row.push_back(format_double(d.z(i)));
    row.push_back(format_double(d.y(i)));
    write_csv_row(out, row);
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path,
                         std::vector<std::string>* donors) {
  const CsvTable t = read_csv(path);
  if (t.rows.empty()) throw DataError(path.string() + ": empty table");
  std::vector<std::size_t> g, h, v;
  std::optional<std::size_t> cx, cz, cy, cd;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const std::string& name = t.header[c];
    if (has_index_suffix(name, 'g')) g.push_back(c);
    else if (has_index_suffix(name, 'h')) h.push_back(c);
    else if (has_index_suffix(name, 'v')) v.push_back(c);
    else if (name == "x") cx = c;
    else if (name == "z") cz = c;
    else if (name == "y") cy = c;
    else if (name == "donor") cd = c;
    else throw DataError(path.string() + ": unexpected column '" + name + "'");
  }
  if (!cx || !cz || !cy) throw DataError(path.string() + ": missing x, z or y column");

  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Dataset d;
  auto fill = [&](const std::vector<std::size_t>& cols, MatrixXd& m) {
    m.resize(n, static_cast<Eigen::Index>(cols.size()));
    for (Eigen::Index i = 0; i < n; ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        m(i, static_cast<Eigen::Index>(j)) = parse_cell(t, static_cast<std::size_t>(i), cols[j]);
  };
  fill(g, d.G);
  fill(h, d.H);
  fill(v, d.V);
  d.x.resize(n);
  d.z.resize(n);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    d.x(i) = parse_cell(t, r, *cx);
    d.z(i) = parse_cell(t, r, *cz);
    d.y(i) = parse_cell(t, r, *cy);
  }
  if (donors) {
    donors->clear();
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      donors->push_back(cd ? t.rows[r][*cd] : "d" + std::to_string(r + 1));
  }
  try {
    d.validate();
  } catch (const ValidationError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return d;
}

void write_truth_csv(const std::filesystem::path& path,
                     const StructuralParams& p) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv_row(out, {"parameter", "value"});
  auto vec = [&](const char* name, const VectorXd& v) {
    for (Eigen::Index j = 0; j < v.size(); ++j)
      write_csv_row(out, {std::string(name) + "_" + std::to_string(j + 1), format_double(v(j))});
  };
  vec("pi_X", p.pi_X);
  vec("pi_Z", p.pi_Z);
  vec("alpha_X", p.alpha_X);
  vec("alpha_Z", p.alpha_Z);
  vec("alpha_Y", p.alpha_Y);
  const std::initializer_list<std::pair<const char*, double>> scalars{
      {"lambda_X", p.lambda_X}, {"lambda_Z", p.lambda_Z},
      {"lambda_Y", p.lambda_Y}, {"beta_X", p.beta_X},
      {"beta_Z", p.beta_Z},     {"beta_XZ", p.beta_XZ},
      {"sigma2_X", p.sigma2_X}, {"sigma2_Z", p.sigma2_Z},
      {"sigma2_Y", p.sigma2_Y}};
  for (const auto& [name, value] : scalars) {
    write_csv_row(out, {name, format_double(value)});
  }
  write_csv_row(out, {"gamma", std::to_string(p.gamma)});
}

}  // namespace mrccc
