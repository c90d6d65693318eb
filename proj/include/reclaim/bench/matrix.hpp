// Sweep matrix files: a flat subset of TOML (top-level `key = value` lines,
// values are strings, numbers, booleans or one-line arrays of those; `#`
// comments). Tables are not supported.
#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "reclaim/bench/trial.hpp"

namespace reclaim::bench {

struct MatrixScalar {
  std::string text;
  bool quoted = false;
};

using MatrixDoc = std::map<std::string, std::vector<MatrixScalar>>;

class MatrixError : public std::runtime_error {
 public:
  MatrixError(int line, const std::string& what)
      : std::runtime_error("matrix line " + std::to_string(line) + ": " + what) {}
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Reads one scalar starting at s[i]; leaves i after it.
inline MatrixScalar read_scalar(const std::string& s, std::size_t& i, int line) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  if (i >= s.size()) throw MatrixError(line, "missing value");
  MatrixScalar v;
  if (s[i] == '"') {
    v.quoted = true;
    ++i;
    while (i < s.size() && s[i] != '"') {
      if (s[i] == '\\' && i + 1 < s.size()) ++i;
      v.text += s[i++];
    }
    if (i >= s.size()) throw MatrixError(line, "unterminated string");
    ++i;
  } else {
    while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '#' &&
           !std::isspace(static_cast<unsigned char>(s[i])))
      v.text += s[i++];
    if (v.text.empty()) throw MatrixError(line, "missing value");
  }
  return v;
}

}  // namespace detail

inline MatrixDoc parse_matrix_text(const std::string& text) {
  MatrixDoc doc;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    // strip comments outside strings
    std::string s;
    bool in_str = false;
    for (char c : raw) {
      if (c == '"') in_str = !in_str;
      if (c == '#' && !in_str) break;
      s += c;
    }
    s = detail::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') throw MatrixError(line, "tables are not supported");
    auto eq = s.find('=');
    if (eq == std::string::npos) throw MatrixError(line, "expected key = value");
    std::string key = detail::trim(s.substr(0, eq));
    if (key.empty()) throw MatrixError(line, "empty key");
    if (doc.count(key)) throw MatrixError(line, "duplicate key " + key);
    std::string rest = detail::trim(s.substr(eq + 1));
    std::vector<MatrixScalar> values;
    std::size_t i = 0;
    if (!rest.empty() && rest.front() == '[') {
      i = 1;
      for (;;) {
        while (i < rest.size() && std::isspace(static_cast<unsigned char>(rest[i]))) ++i;
        if (i < rest.size() && rest[i] == ']') {
          ++i;
          break;
        }
        values.push_back(detail::read_scalar(rest, i, line));
        while (i < rest.size() && std::isspace(static_cast<unsigned char>(rest[i]))) ++i;
        if (i < rest.size() && rest[i] == ',') {
          ++i;
          continue;
        }
        if (i < rest.size() && rest[i] == ']') {
          ++i;
          break;
        }
        throw MatrixError(line, "expected , or ] in array");
      }
    } else {
      values.push_back(detail::read_scalar(rest, i, line));
    }
    if (!detail::trim(rest.substr(std::min(i, rest.size()))).empty())
      throw MatrixError(line, "trailing characters");
    doc.emplace(key, std::move(values));
  }
  return doc;
}

struct SweepMatrix {
  std::vector<DsKind> structures;
  std::vector<SchemeKind> schemes;
  std::vector<int> threads{1, 2, 4, 8};
  std::vector<Workload> workloads{{50, 50, 0}};
  std::vector<Stall> stalls{Stall::none};
  double duration = 2.0;
  int trials = 3;
  std::uint64_t key_range = 0;  // 0 = per-structure default
  double prefill = 0.5;
  AllocMode alloc = AllocMode::release;
  std::uint64_t seed = 1;
};

inline SweepMatrix parse_matrix(const std::string& text) {
  MatrixDoc doc = parse_matrix_text(text);
  SweepMatrix m;
  auto strings = [&](const std::string& key) {
    std::vector<std::string> out;
    for (auto& v : doc.at(key)) out.push_back(v.text);
    return out;
  };
  auto single = [&](const std::string& key) -> const std::string& {
    const auto& v = doc.at(key);
    if (v.size() != 1) throw std::invalid_argument(key + " must be a single value");
    return v.front().text;
  };
  for (const auto& [key, _] : doc) {
    if (key == "structures") {
      for (auto& s : strings(key))
        if (s == "all")
          m.structures.assign(std::begin(kAllStructures), std::end(kAllStructures));
        else
          m.structures.push_back(parse_structure(s));
    } else if (key == "schemes") {
      for (auto& s : strings(key))
        if (s == "all")
          m.schemes.assign(std::begin(kAllSchemes), std::end(kAllSchemes));
        else
          m.schemes.push_back(parse_scheme(s));
    } else if (key == "threads") {
      m.threads.clear();
      for (auto& s : strings(key)) m.threads.push_back(std::stoi(s));
    } else if (key == "workloads") {
      m.workloads.clear();
      for (auto& s : strings(key)) m.workloads.push_back(parse_workload(s));
    } else if (key == "stall") {
      m.stalls.clear();
      for (auto& s : strings(key)) m.stalls.push_back(parse_stall(s));
    } else if (key == "duration") {
      m.duration = std::stod(single(key));
    } else if (key == "trials") {
      m.trials = std::stoi(single(key));
    } else if (key == "key_range") {
      m.key_range = std::stoull(single(key));
    } else if (key == "prefill") {
      m.prefill = std::stod(single(key));
    } else if (key == "alloc") {
      m.alloc = parse_alloc_mode(single(key));
    } else if (key == "seed") {
      m.seed = std::stoull(single(key));
    } else {
      throw std::invalid_argument("unknown matrix key: " + key);
    }
  }
  if (m.structures.empty()) throw std::invalid_argument("matrix needs structures");
  if (m.schemes.empty()) throw std::invalid_argument("matrix needs schemes");
  return m;
}

inline SweepMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matrix(ss.str());
}

/// Every valid trial configuration in the matrix; unsupported pairs are
/// skipped.
inline std::vector<TrialConfig> expand(const SweepMatrix& m) {
  std::vector<TrialConfig> out;
  for (DsKind ds : m.structures)
    for (SchemeKind s : m.schemes) {
      if (!pairing_allowed(ds, s)) continue;
      for (const Workload& w : m.workloads)
        for (Stall st : m.stalls)
          for (int t : m.threads) {
            TrialConfig c;
            c.structure = ds;
            c.scheme = s;
            c.threads = t;
            c.duration = m.duration;
            c.key_range = m.key_range != 0 ? m.key_range : default_key_range(ds);
            c.workload = w;
            c.trials = m.trials;
            c.prefill = m.prefill;
            c.stall = st;
            c.alloc_mode = m.alloc;
            c.seed = m.seed;
            out.push_back(c);
          }
    }
  return out;
}

}  // namespace reclaim::bench
