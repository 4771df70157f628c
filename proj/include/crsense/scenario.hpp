#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "crsense/matrix.hpp"

namespace crsense {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

// Locale-independent double parsing; the token must be consumed entirely.
inline bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Line-oriented document: "key = value" scalars plus [section] headers
// followed by whitespace-separated numeric rows. '#' starts a comment.
struct TabularDoc {
  struct Scalar {
    std::string value;
    int line = 0;
  };
  struct Section {
    std::vector<std::vector<double>> rows;
    int line = 0;
  };
  std::map<std::string, Scalar> scalars;
  std::map<std::string, Section> sections;
  std::string source;

  bool has_scalar(const std::string& key) const {
    return scalars.count(key) != 0;
  }

  const Scalar& scalar(const std::string& key) const {
    auto it = scalars.find(key);
    if (it == scalars.end()) {
      throw ParseError(source, 0, "missing required field '" + key + "'");
    }
    return it->second;
  }

  double scalar_double(const std::string& key) const {
    const Scalar& s = scalar(key);
    double v = 0.0;
    if (!parse_double(s.value, v)) {
      throw ParseError(source, s.line, "field '" + key + "' is not a number");
    }
    return v;
  }

  long scalar_long(const std::string& key) const {
    const Scalar& s = scalar(key);
    long v = 0;
    const char* first = s.value.data();
    const char* last = first + s.value.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
      throw ParseError(source, s.line, "field '" + key + "' is not an integer");
    }
    return v;
  }

  const Section& section(const std::string& name) const {
    auto it = sections.find(name);
    if (it == sections.end()) {
      throw ParseError(source, 0, "missing required section [" + name + "]");
    }
    return it->second;
  }

  Matrix section_matrix(const std::string& name, std::size_t rows,
                        std::size_t cols) const {
    const Section& sec = section(name);
    if (sec.rows.size() != rows) {
      throw ParseError(source, sec.line,
                       "section [" + name + "] expects " + std::to_string(rows) +
                           " rows, found " + std::to_string(sec.rows.size()));
    }
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (sec.rows[r].size() != cols) {
        throw ParseError(source, sec.line,
                         "section [" + name + "] row " + std::to_string(r + 1) +
                             " expects " + std::to_string(cols) +
                             " values, found " + std::to_string(sec.rows[r].size()));
      }
      for (std::size_t c = 0; c < cols; ++c) m.at(r, c) = sec.rows[r][c];
    }
    return m;
  }

  std::vector<double> section_row(const std::string& name, std::size_t cols) const {
    return section_matrix(name, 1, cols).data;
  }
};

inline TabularDoc parse_tabular(std::istream& in, const std::string& source) {
  TabularDoc doc;
  doc.source = source;
  std::string line;
  std::string current_section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string_view body = trim(line);
    if (body.empty()) continue;

    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) {
        throw ParseError(source, lineno, "malformed section header");
      }
      current_section = std::string(trim(body.substr(1, body.size() - 2)));
      if (doc.sections.count(current_section)) {
        throw ParseError(source, lineno,
                         "duplicate section [" + current_section + "]");
      }
      doc.sections[current_section].line = lineno;
      continue;
    }

    if (const auto eq = body.find('='); eq != std::string_view::npos) {
      const std::string key{trim(body.substr(0, eq))};
      const std::string value{trim(body.substr(eq + 1))};
      if (key.empty() || value.empty()) {
        throw ParseError(source, lineno, "malformed key = value line");
      }
      if (doc.scalars.count(key)) {
        throw ParseError(source, lineno, "duplicate field '" + key + "'");
      }
      doc.scalars[key] = TabularDoc::Scalar{value, lineno};
      current_section.clear();
      continue;
    }

    if (current_section.empty()) {
      throw ParseError(source, lineno, "numeric row outside any section");
    }
    std::vector<double> row;
    std::size_t pos = 0;
    const std::string_view sv = body;
    while (pos < sv.size()) {
      while (pos < sv.size() && (sv[pos] == ' ' || sv[pos] == '\t')) ++pos;
      if (pos >= sv.size()) break;
      std::size_t end = pos;
      while (end < sv.size() && sv[end] != ' ' && sv[end] != '\t') ++end;
      double v = 0.0;
      if (!parse_double(sv.substr(pos, end - pos), v)) {
        throw ParseError(source, lineno,
                         "malformed number '" + std::string(sv.substr(pos, end - pos)) + "'");
      }
      row.push_back(v);
      pos = end;
    }
    doc.sections[current_section].rows.push_back(std::move(row));
  }
  return doc;
}

}  // namespace detail

// Ground-truth description of one network: band idle probabilities, the
// per-SU/band local detector operating points, mean data rates, the collision
// constraint and the per-SU sensing capacity.
struct Scenario {
  int num_bands = 0;                    // K
  int num_sus = 0;                      // N
  std::vector<double> idle_prob;        // per band, in (0,1)
  Matrix local_beta;                    // N x K detection probabilities
  Matrix local_alpha;                   // N x K false-alarm probabilities
  Matrix mean_rate;                     // N x K mean data rates when idle
  double collision_limit = 0.1;         // omega, in (0,1)
  int capacity = 1;                     // bands one SU can sense per slot

  void validate() const {
    if (num_bands < 1 || num_sus < 1) {
      throw std::invalid_argument("scenario: need at least one band and one SU");
    }
    if (idle_prob.size() != static_cast<std::size_t>(num_bands)) {
      throw std::invalid_argument("scenario: idle_prob size mismatch");
    }
    for (int k = 0; k < num_bands; ++k) {
      if (!(idle_prob[k] > 0.0 && idle_prob[k] < 1.0)) {
        throw std::invalid_argument("scenario: idle_prob must lie in (0,1) at band " +
                                    std::to_string(k + 1));
      }
    }
    const auto want_shape = [&](const Matrix& m, const char* name) {
      if (m.rows != static_cast<std::size_t>(num_sus) ||
          m.cols != static_cast<std::size_t>(num_bands)) {
        throw std::invalid_argument(std::string("scenario: ") + name +
                                    " must be sus x bands");
      }
    };
    want_shape(local_beta, "beta");
    want_shape(local_alpha, "alpha");
    want_shape(mean_rate, "rate");
    for (int i = 0; i < num_sus; ++i) {
      for (int k = 0; k < num_bands; ++k) {
        const double b = local_beta.at(i, k);
        const double a = local_alpha.at(i, k);
        const double r = mean_rate.at(i, k);
        const std::string where =
            " (SU " + std::to_string(i + 1) + ", band " + std::to_string(k + 1) + ")";
        if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0)) {
          throw std::invalid_argument(
              "scenario: detection/false-alarm probabilities must lie in (0,1)" + where);
        }
        if (!(b > a)) {
          throw std::invalid_argument("scenario: requires beta > alpha" + where);
        }
        if (!(r >= 0.0) || !std::isfinite(r)) {
          throw std::invalid_argument("scenario: rates must be finite and >= 0" + where);
        }
      }
    }
    if (!(collision_limit > 0.0 && collision_limit < 1.0)) {
      throw std::invalid_argument("scenario: collision_limit must lie in (0,1)");
    }
    if (capacity < 1) {
      throw std::invalid_argument("scenario: capacity must be >= 1");
    }
  }
};

inline Scenario parse_scenario(std::istream& in, const std::string& source) {
  const detail::TabularDoc doc = detail::parse_tabular(in, source);
  Scenario s;
  s.num_bands = static_cast<int>(doc.scalar_long("bands"));
  s.num_sus = static_cast<int>(doc.scalar_long("sus"));
  if (s.num_bands < 1 || s.num_sus < 1) {
    throw ParseError(source, doc.scalar("bands").line,
                     "bands and sus must be positive");
  }
  s.collision_limit = doc.scalar_double("collision_limit");
  if (doc.has_scalar("capacity")) {
    s.capacity = static_cast<int>(doc.scalar_long("capacity"));
  }
  const auto n = static_cast<std::size_t>(s.num_sus);
  const auto k = static_cast<std::size_t>(s.num_bands);
  s.idle_prob = doc.section_row("idle_prob", k);
  s.local_beta = doc.section_matrix("beta", n, k);
  s.local_alpha = doc.section_matrix("alpha", n, k);
  s.mean_rate = doc.section_matrix("rate", n, k);
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open scenario file: " + path);
  }
  return parse_scenario(in, path);
}

inline void save_scenario(const Scenario& s, std::ostream& out) {
  using detail::format_double;
  out << "bands = " << s.num_bands << "\n";
  out << "sus = " << s.num_sus << "\n";
  out << "collision_limit = " << format_double(s.collision_limit) << "\n";
  out << "capacity = " << s.capacity << "\n";
  const auto write_matrix = [&](const char* name, const Matrix& m) {
    out << "\n[" << name << "]\n";
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c) {
        if (c) out << ' ';
        out << format_double(m.at(r, c));
      }
      out << "\n";
    }
  };
  out << "\n[idle_prob]\n";
  for (std::size_t i = 0; i < s.idle_prob.size(); ++i) {
    if (i) out << ' ';
    out << format_double(s.idle_prob[i]);
  }
  out << "\n";
  write_matrix("beta", s.local_beta);
  write_matrix("alpha", s.local_alpha);
  write_matrix("rate", s.mean_rate);
}

}  // namespace crsense
