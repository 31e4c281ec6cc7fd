#pragma once

// Problem files, trace CSV and report CSV.
//
// Problem file layout:
//
//   # comment
//   family = smart          (euclid | landweber | smart | emml | hellinger | pearson)
//   rows = 2
//   cols = 1
//   gamma = 0.5             (optional, landweber only)
//   max_iters = 1000        (optional)
//   f_tol = 0               (optional)
//   step_tol = 1e-12        (optional)
//   seed = 7                (optional)
//   [matrix]
//   0.5
//   0.5
//   [data]
//   1 3
//   [start]                 (optional: ones for KL families, zeros otherwise)
//   1
//
// Numbers are separated by whitespace or commas. [matrix] holds `rows` lines
// of `cols` numbers; [data] and [start] may wrap across lines.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "auxfn/check_report.hpp"
#include "auxfn/framework.hpp"
#include "auxfn/model.hpp"
#include "auxfn/solvers.hpp"

namespace auxfn {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& message)
      : std::runtime_error(format(line, field, message)),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string format(std::size_t line, const std::string& field,
                            const std::string& message) {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    if (!field.empty()) os << "field '" << field << "': ";
    os << message;
    return os.str();
  }
  std::size_t line_;
  std::string field_;
};

struct ProblemOptions {
  std::optional<double> gamma;
  std::optional<std::size_t> max_iters;
  std::optional<double> f_tol;
  std::optional<double> step_tol;
  std::optional<std::uint64_t> seed;
};

struct ProblemFile {
  Family family = Family::smart;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd data;
  Eigen::VectorXd start;
  ProblemOptions options;

  KlProblem kl_problem() const {
    return KlProblem(NonnegMatrix(matrix), data, start);
  }
  EuclidProblem euclid_problem() const {
    return EuclidProblem(RealMatrix(matrix), data, start);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& token, std::size_t line,
                           const std::string& field) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw ParseError(line, field, "not a number: '" + token + "'");
  }
  if (used != token.size()) throw ParseError(line, field, "not a number: '" + token + "'");
  if (!std::isfinite(v)) throw ParseError(line, field, "non-finite value '" + token + "'");
  return v;
}

inline std::size_t parse_count(const std::string& token, std::size_t line,
                               const std::string& field) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!token.empty() && token[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(token, &used);
  } catch (const std::exception&) {
    throw ParseError(line, field, "expected a nonnegative integer, got '" + token + "'");
  }
  if (used != token.size()) {
    throw ParseError(line, field, "expected a nonnegative integer, got '" + token + "'");
  }
  return static_cast<std::size_t>(v);
}

inline std::vector<std::string> split_numbers(const std::string& line) {
  std::string s = line;
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace detail

inline ProblemFile parse_problem(std::istream& in) {
  ProblemFile pf;
  std::map<std::string, std::size_t> seen;
  std::optional<std::size_t> rows, cols;
  std::string section;
  std::size_t section_line = 0;
  std::vector<std::vector<double>> matrix_rows;
  std::vector<std::size_t> matrix_lines;
  std::vector<double> data, start;
  bool have_family = false, have_matrix = false, have_data = false, have_start = false;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "", "unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      section_line = line_no;
      bool* flag = section == "matrix" ? &have_matrix
                   : section == "data" ? &have_data
                   : section == "start" ? &have_start
                                        : nullptr;
      if (!flag) throw ParseError(line_no, section, "unknown section (expected matrix, data or start)");
      if (*flag) throw ParseError(line_no, section, "section given twice");
      *flag = true;
      continue;
    }

    if (section.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ParseError(line_no, "", "expected 'key = value' before the first section");
      }
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (value.empty()) throw ParseError(line_no, key, "missing value");
      if (seen.count(key)) throw ParseError(line_no, key, "key given twice");
      seen[key] = line_no;
      if (key == "family") {
        try {
          pf.family = family_from_string(value);
        } catch (const std::invalid_argument& e) {
          throw ParseError(line_no, key, e.what());
        }
        have_family = true;
      } else if (key == "rows") {
        rows = detail::parse_count(value, line_no, key);
      } else if (key == "cols") {
        cols = detail::parse_count(value, line_no, key);
      } else if (key == "gamma") {
        pf.options.gamma = detail::parse_number(value, line_no, key);
      } else if (key == "max_iters") {
        pf.options.max_iters = detail::parse_count(value, line_no, key);
      } else if (key == "f_tol") {
        pf.options.f_tol = detail::parse_number(value, line_no, key);
      } else if (key == "step_tol") {
        pf.options.step_tol = detail::parse_number(value, line_no, key);
      } else if (key == "seed") {
        pf.options.seed = detail::parse_count(value, line_no, key);
      } else {
        throw ParseError(line_no, key, "unknown key");
      }
      continue;
    }

    std::vector<double> values;
    for (const auto& tok : detail::split_numbers(line)) {
      values.push_back(detail::parse_number(tok, line_no, section));
    }
    if (section == "matrix") {
      matrix_rows.push_back(std::move(values));
      matrix_lines.push_back(line_no);
    } else if (section == "data") {
      data.insert(data.end(), values.begin(), values.end());
    } else {
      start.insert(start.end(), values.begin(), values.end());
    }
  }
  (void)section_line;

  if (!have_family) throw ParseError(0, "family", "missing required key");
  if (!rows) throw ParseError(0, "rows", "missing required key");
  if (!cols) throw ParseError(0, "cols", "missing required key");
  if (*rows < 1) throw ParseError(seen["rows"], "rows", "must be at least 1");
  if (*cols < 1) throw ParseError(seen["cols"], "cols", "must be at least 1");
  if (!have_matrix) throw ParseError(0, "matrix", "missing section");
  if (!have_data) throw ParseError(0, "data", "missing section");

  const auto I = static_cast<Eigen::Index>(*rows);
  const auto J = static_cast<Eigen::Index>(*cols);
  if (matrix_rows.size() != *rows) {
    std::ostringstream os;
    os << "expected " << *rows << " rows, found " << matrix_rows.size();
    throw ParseError(matrix_lines.empty() ? 0 : matrix_lines.back(), "matrix", os.str());
  }
  pf.matrix.resize(I, J);
  for (Eigen::Index i = 0; i < I; ++i) {
    const auto& r = matrix_rows[static_cast<std::size_t>(i)];
    if (r.size() != *cols) {
      std::ostringstream os;
      os << "expected " << *cols << " values, found " << r.size();
      throw ParseError(matrix_lines[static_cast<std::size_t>(i)], "matrix", os.str());
    }
    for (Eigen::Index j = 0; j < J; ++j) pf.matrix(i, j) = r[static_cast<std::size_t>(j)];
  }
  if (data.size() != *rows) {
    std::ostringstream os;
    os << "expected " << *rows << " values, found " << data.size();
    throw ParseError(0, "data", os.str());
  }
  pf.data = Eigen::Map<const Eigen::VectorXd>(data.data(), I);
  if (have_start) {
    if (start.size() != *cols) {
      std::ostringstream os;
      os << "expected " << *cols << " values, found " << start.size();
      throw ParseError(0, "start", os.str());
    }
    pf.start = Eigen::Map<const Eigen::VectorXd>(start.data(), J);
  } else {
    pf.start = is_kl_family(pf.family) ? Eigen::VectorXd::Ones(J)
                                       : Eigen::VectorXd::Zero(J);
  }

  if (pf.options.gamma && pf.family != Family::landweber) {
    throw ParseError(seen["gamma"], "gamma", "only valid for family landweber");
  }
  // Family constraints, reported against the offending field.
  try {
    if (is_kl_family(pf.family)) {
      try {
        NonnegMatrix m(pf.matrix);
      } catch (const std::exception& e) {
        throw ParseError(0, "matrix", e.what());
      }
      for (Eigen::Index i = 0; i < I; ++i) {
        if (!(pf.data[i] > 0.0)) throw ParseError(0, "data", "entries must be positive for KL families");
      }
      for (Eigen::Index j = 0; j < J; ++j) {
        if (!(pf.start[j] > 0.0)) throw ParseError(0, "start", "entries must be positive for KL families");
      }
    } else {
      try {
        RealMatrix m(pf.matrix);
      } catch (const std::exception& e) {
        throw ParseError(0, "matrix", e.what());
      }
    }
  } catch (const ParseError&) {
    throw;
  }
  return pf;
}

inline ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "", "cannot open '" + path + "'");
  return parse_problem(in);
}

inline void write_problem(std::ostream& os, const ProblemFile& pf) {
  const auto old_precision = os.precision(17);
  os << "family = " << to_string(pf.family) << "\n";
  os << "rows = " << pf.matrix.rows() << "\n";
  os << "cols = " << pf.matrix.cols() << "\n";
  if (pf.options.gamma) os << "gamma = " << *pf.options.gamma << "\n";
  if (pf.options.max_iters) os << "max_iters = " << *pf.options.max_iters << "\n";
  if (pf.options.f_tol) os << "f_tol = " << *pf.options.f_tol << "\n";
  if (pf.options.step_tol) os << "step_tol = " << *pf.options.step_tol << "\n";
  if (pf.options.seed) os << "seed = " << *pf.options.seed << "\n";
  os << "[matrix]\n";
  for (Eigen::Index i = 0; i < pf.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < pf.matrix.cols(); ++j) {
      os << (j ? " " : "") << pf.matrix(i, j);
    }
    os << "\n";
  }
  os << "[data]\n";
  for (Eigen::Index i = 0; i < pf.data.size(); ++i) os << (i ? " " : "") << pf.data[i];
  os << "\n[start]\n";
  for (Eigen::Index j = 0; j < pf.start.size(); ++j) os << (j ? " " : "") << pf.start[j];
  os << "\n";
  os.precision(old_precision);
}

/// Columns: k, f, step_distance, then the slack names in sorted order.
/// Missing slacks (e.g. at k = 0) are written as empty fields.
inline void write_trace_csv(std::ostream& os, const IterationTrace& trace) {
  const auto old_precision = os.precision(17);
  const auto names = trace.slack_names();
  os << "k,f,step_distance";
  for (const auto& n : names) os << "," << n;
  os << "\n";
  for (const auto& rec : trace.all()) {
    os << rec.k << "," << rec.f << "," << rec.step_distance;
    for (const auto& n : names) {
      os << ",";
      if (auto it = rec.slacks.find(n); it != rec.slacks.end()) os << it->second;
    }
    os << "\n";
  }
  os.precision(old_precision);
}

namespace detail {

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

inline void write_report_header(std::ostream& os) {
  os << "name,samples,worst_slack,mean_slack,tolerance,pass,probe,notes\n";
}

/// Component minima are appended to the notes as `component=value`.
inline void write_report_row(std::ostream& os, const CheckReport& r) {
  const auto old_precision = os.precision(17);
  std::ostringstream notes;
  notes.precision(6);
  notes << r.notes;
  for (const auto& [key, value] : r.components) {
    if (notes.tellp() > 0) notes << "; ";
    notes << key << "=" << value;
  }
  os << detail::csv_quote(r.name) << "," << r.samples << "," << r.worst_slack << ","
     << r.mean_slack << "," << r.tolerance << "," << (r.pass ? "true" : "false") << ","
     << (r.probe ? "true" : "false") << "," << detail::csv_quote(notes.str()) << "\n";
  os.precision(old_precision);
}

inline void write_report_csv(std::ostream& os, const std::vector<CheckReport>& reports) {
  write_report_header(os);
  for (const auto& r : reports) write_report_row(os, r);
}

}  // namespace auxfn
