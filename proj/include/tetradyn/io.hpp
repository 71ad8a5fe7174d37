#pragma once

// Tetrahedron exchange formats.
//   JSON: {"edges": [[a,b,c],[d,e,f],[g,h,i]]}, one inner array per edge
//         vector x1-x0, x2-x0, x3-x0.
//   Text: 9 numbers separated by whitespace or commas, same column order.
// Point specs: identity | regular | file:<path> | inline:<9 numbers>.

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tetradyn/error.hpp"
#include "tetradyn/linalg.hpp"
#include "tetradyn/shape_space.hpp"
#include "tetradyn/tetrahedron.hpp"

namespace tetradyn::io {

/// 17 significant digits; round-trips every double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  auto is_sep = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ',';
  };
  while (pos < text.size()) {
    while (pos < text.size() && is_sep(text[pos])) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && !is_sep(text[end])) ++end;
    const std::string_view token = text.substr(pos, end - pos);
    double v = 0.0;
    const char* first = token.data();
    if (!token.empty() && token.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw Error(ErrorKind::ParseError,
                  "not a number: '" + std::string(token) + "'");
    }
    out.push_back(v);
    pos = end;
  }
  return out;
}

inline Tetrahedron make_valid(const Mat3& edges) {
  try {
    return Tetrahedron(edges);
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError,
                std::string("input is not a valid tetrahedron (") + e.what() + ")");
  }
}

inline Tetrahedron tetrahedron_from_numbers(const std::vector<double>& v) {
  if (v.size() != 9) {
    throw Error(ErrorKind::ParseError,
                "expected 9 numbers, got " + std::to_string(v.size()));
  }
  Mat3 e;
  for (int col = 0; col < 3; ++col) {
    for (int row = 0; row < 3; ++row) e(row, col) = v[3 * col + row];
  }
  return make_valid(e);
}

inline Tetrahedron tetrahedron_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("edges") || !j["edges"].is_array() ||
      j["edges"].size() != 3) {
    throw Error(ErrorKind::ParseError,
                "JSON tetrahedron needs \"edges\": three 3-element arrays");
  }
  std::vector<double> flat;
  for (const auto& col : j["edges"]) {
    if (!col.is_array() || col.size() != 3) {
      throw Error(ErrorKind::ParseError, "each edge must have 3 components");
    }
    for (const auto& x : col) {
      if (!x.is_number()) throw Error(ErrorKind::ParseError, "non-numeric edge entry");
      flat.push_back(x.get<double>());
    }
  }
  return tetrahedron_from_numbers(flat);
}

/// JSON if the first non-blank character is '{', otherwise plain numbers.
inline Tetrahedron parse_tetrahedron(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, e.what());
    }
    return tetrahedron_from_json(j);
  }
  return tetrahedron_from_numbers(parse_numbers(text));
}

inline nlohmann::json edges_to_json(const Mat3& edges) {
  nlohmann::json cols = nlohmann::json::array();
  for (int c = 0; c < 3; ++c) {
    cols.push_back({edges(0, c), edges(1, c), edges(2, c)});
  }
  return cols;
}

inline nlohmann::json to_json(const Tetrahedron& t) {
  return {{"edges", edges_to_json(t.edges())}};
}

inline std::string to_text(const Mat3& edges) {
  std::string out;
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 3; ++r) {
      if (!out.empty()) out += ' ';
      out += format_double(edges(r, c));
    }
  }
  return out;
}

inline Tetrahedron resolve_point(std::string_view spec) {
  if (spec == "identity") return Tetrahedron(Mat3::Identity());
  if (spec == "regular") return canonical_regular();
  if (spec.starts_with("inline:")) return parse_tetrahedron(spec.substr(7));
  if (spec.starts_with("file:")) {
    const std::string path(spec.substr(5));
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_tetrahedron(ss.str());
  }
  throw Error(ErrorKind::ParseError,
              "point must be identity, regular, file:<path> or inline:<9 numbers>");
}

}  // namespace tetradyn::io
