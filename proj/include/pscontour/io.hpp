#pragma once

// Text formats.
//
// Model documents (line oriented, '#' starts a comment):
//
//   dims <d> <r> <q> <s>
//   term
//   offsets (x1,...,xd);(x1,...,xd);...
//   entry <spin> ... <spin> <value>      # one spin per offset, in order
//   end
//
// Configuration documents:
//
//   config <d> <r> <q> <s> <i>
//   box <lo1>..<hi1> ... <lod>..<hid>
//   <spins, row-major with the first axis slowest, whitespace separated>
//
// Built-in models are named as "potts:q=3,J=1"; see parse_builtin.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pscontour/configuration.hpp"
#include "pscontour/error.hpp"
#include "pscontour/model.hpp"

namespace pscontour {

class ParseError : public InputError {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& message)
      : InputError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

namespace detail {

struct Token {
  std::string text;
  std::size_t column;  // 1-based
};

inline std::vector<Token> tokenize_line(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != '#') ++i;
    out.push_back({std::string(line.substr(start, i - start)), start + 1});
  }
  return out;
}

inline bool parse_long(std::string_view s, long& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stol(std::string(s), &used);
  } catch (...) {
    return false;
  }
  return used == s.size();
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(std::string(s), &used);
  } catch (...) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

}  // namespace detail

inline ModelSpec parse_model(std::istream& in, const std::string& source = "<model>") {
  ModelSpec m;
  bool have_dims = false;
  std::string raw;
  std::size_t line_no = 0;
  enum class State { top, term } state = State::top;
  std::vector<Site> offsets;
  std::vector<std::pair<std::vector<Spin>, double>> entries;
  std::size_t term_line = 0;
  bool have_offsets = false;

  auto fail = [&](std::size_t col, const std::string& msg) -> void { throw ParseError(source, line_no, col, msg); };
  auto integer = [&](const detail::Token& t, const char* what) {
    long v = 0;
    if (!detail::parse_long(t.text, v)) fail(t.column, std::string("expected integer ") + what + ", got '" + t.text + "'");
    return v;
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const auto toks = detail::tokenize_line(raw);
    if (toks.empty()) continue;
    const auto& kw = toks.front();
    if (state == State::top) {
      if (kw.text == "dims") {
        if (have_dims) fail(kw.column, "duplicate 'dims' line");
        if (toks.size() != 5) fail(kw.column, "'dims' takes exactly four integers: d r q s");
        m.d = static_cast<int>(integer(toks[1], "d"));
        m.r = static_cast<Coord>(integer(toks[2], "r"));
        m.q = static_cast<int>(integer(toks[3], "q"));
        m.s = static_cast<int>(integer(toks[4], "s"));
        if (m.d < 2) fail(toks[1].column, "dimension must be at least 2");
        if (m.r < 1) fail(toks[2].column, "range must be at least 1");
        if (m.q < 1) fail(toks[3].column, "spin count must be positive");
        if (m.s < 1 || m.s > m.q) fail(toks[4].column, "s must satisfy 1 <= s <= q");
        have_dims = true;
      } else if (kw.text == "term") {
        if (!have_dims) fail(kw.column, "'term' before 'dims'");
        if (toks.size() != 1) fail(toks[1].column, "unexpected text after 'term'");
        state = State::term;
        offsets.clear();
        entries.clear();
        have_offsets = false;
        term_line = line_no;
      } else {
        fail(kw.column, "unknown keyword '" + kw.text + "'");
      }
      continue;
    }
    // inside a term block
    if (kw.text == "offsets") {
      if (have_offsets) fail(kw.column, "duplicate 'offsets' line");
      std::string joined;
      std::size_t col0 = toks.size() > 1 ? toks[1].column : kw.column;
      for (std::size_t k = 1; k < toks.size(); ++k) joined += toks[k].text;
      if (joined.empty()) fail(kw.column, "'offsets' needs at least one offset");
      std::size_t pos = 0;
      while (pos < joined.size()) {
        if (joined[pos] != '(') fail(col0, "expected '(' in offset list");
        const auto close = joined.find(')', pos);
        if (close == std::string::npos) fail(col0, "unterminated offset");
        std::vector<Coord> coords;
        std::stringstream inner(joined.substr(pos + 1, close - pos - 1));
        std::string part;
        while (std::getline(inner, part, ',')) {
          long v = 0;
          if (!detail::parse_long(part, v)) fail(col0, "bad offset coordinate '" + part + "'");
          coords.push_back(static_cast<Coord>(v));
        }
        if (static_cast<int>(coords.size()) != m.d)
          fail(col0, "offset has " + std::to_string(coords.size()) + " coordinates, expected " + std::to_string(m.d));
        offsets.emplace_back(std::move(coords));
        pos = close + 1;
        if (pos < joined.size()) {
          if (joined[pos] != ';') fail(col0, "expected ';' between offsets");
          ++pos;
        }
      }
      have_offsets = true;
    } else if (kw.text == "entry") {
      if (!have_offsets) fail(kw.column, "'entry' before 'offsets'");
      if (toks.size() != offsets.size() + 2)
        fail(kw.column, "'entry' needs " + std::to_string(offsets.size()) + " spins and a value");
      std::vector<Spin> pat;
      for (std::size_t k = 1; k + 1 < toks.size(); ++k) {
        const long v = integer(toks[k], "spin");
        if (v < 1 || v > m.q) fail(toks[k].column, "spin value outside 1..q");
        pat.push_back(static_cast<Spin>(v));
      }
      double value = 0.0;
      if (!detail::parse_double(toks.back().text, value)) fail(toks.back().column, "bad energy value '" + toks.back().text + "'");
      entries.emplace_back(std::move(pat), value);
    } else if (kw.text == "end") {
      if (!have_offsets) fail(kw.column, "term without 'offsets'");
      try {
        InteractionTerm term(offsets, m.q);
        for (const auto& [pat, value] : entries) term.set(pat, value);
        if (diameter(term.shape()) > m.r)
          throw ModelError("term shape has diameter " + std::to_string(diameter(term.shape())) + " > r");
        m.terms.push_back(std::move(term));
      } catch (const ParseError&) {
        throw;
      } catch (const InputError& e) {
        throw ParseError(source, term_line, 1, e.what());
      }
      state = State::top;
    } else {
      fail(kw.column, "unknown keyword '" + kw.text + "' inside term");
    }
  }
  if (state == State::term) throw ParseError(source, term_line, 1, "term block not closed with 'end'");
  if (!have_dims) throw ParseError(source, line_no + 1, 1, "missing 'dims' line");
  m.validate();
  return m;
}

inline ModelSpec parse_model_string(const std::string& text, const std::string& source = "<model>") {
  std::istringstream in(text);
  return parse_model(in, source);
}

inline ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file '" + path + "'");
  return parse_model(in, path);
}

/// "potts:q=3,J=1", "ising", "potts-excited:q=3,s=2,h=1". Keys: d r q s J h field.
inline ModelSpec parse_builtin(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  std::map<std::string, double> kv;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      double v = 0.0;
      if (eq == std::string::npos || !detail::parse_double(item.substr(eq + 1), v))
        throw InputError("built-in parameter '" + item + "' is not of the form key=value");
      const auto key = item.substr(0, eq);
      if (key != "d" && key != "r" && key != "q" && key != "s" && key != "J" && key != "h" && key != "field")
        throw InputError("unknown built-in parameter '" + key + "'");
      kv[key] = v;
    }
  }
  auto get = [&](const char* key, double fallback) { return kv.count(key) ? kv[key] : fallback; };
  auto get_int = [&](const char* key, int fallback) {
    const double v = get(key, fallback);
    if (v != std::floor(v)) throw InputError(std::string("built-in parameter ") + key + " must be an integer");
    return static_cast<int>(v);
  };
  const int d = get_int("d", 2);
  const auto r = static_cast<Coord>(get_int("r", 1));
  const double coupling = get("J", 1.0);
  ModelSpec m;
  if (name == "potts") {
    const int q = get_int("q", 2);
    m = builtin::potts(d, r, q, coupling);
    m.s = get_int("s", q);
  } else if (name == "ising") {
    if (kv.count("q") && get_int("q", 2) != 2) throw InputError("ising has q = 2");
    m = builtin::ising(d, r, coupling);
    m.s = get_int("s", 2);
  } else if (name == "potts-excited") {
    const int q = get_int("q", 3);
    m = builtin::potts_excited(d, r, q, get_int("s", q - 1), coupling, get("h", 1.0));
  } else {
    throw InputError("unknown built-in model '" + name + "' (expected potts, ising or potts-excited)");
  }
  if (kv.count("field")) builtin::add_field(m, kv["field"]);
  m.validate();
  return m;
}

inline Configuration parse_configuration(std::istream& in, const std::string& source = "<config>") {
  std::string raw;
  std::size_t line_no = 0;
  auto next_tokens = [&]() {
    while (std::getline(in, raw)) {
      ++line_no;
      auto toks = detail::tokenize_line(raw);
      if (!toks.empty()) return toks;
    }
    return std::vector<detail::Token>{};
  };
  auto integer = [&](const detail::Token& t) {
    long v = 0;
    if (!detail::parse_long(t.text, v)) throw ParseError(source, line_no, t.column, "expected integer, got '" + t.text + "'");
    return v;
  };

  auto head = next_tokens();
  if (head.empty() || head.front().text != "config" || head.size() != 6)
    throw ParseError(source, std::max<std::size_t>(line_no, 1), 1, "expected header 'config d r q s i'");
  const int d = static_cast<int>(integer(head[1]));
  const long r = integer(head[2]), q = integer(head[3]), s = integer(head[4]), i = integer(head[5]);
  if (d < 1 || r < 1 || q < 1 || s < 1 || s > q || i < 1 || i > s)
    throw ParseError(source, line_no, 1, "inconsistent header values");

  auto boxline = next_tokens();
  if (boxline.empty() || boxline.front().text != "box" || static_cast<int>(boxline.size()) != d + 1)
    throw ParseError(source, line_no, 1, "expected 'box lo..hi' with one range per axis");
  Site lo = Site::origin(d), hi = Site::origin(d);
  for (int k = 0; k < d; ++k) {
    const auto& t = boxline[static_cast<std::size_t>(k + 1)];
    const auto dots = t.text.find("..");
    long a = 0, b = 0;
    if (dots == std::string::npos || !detail::parse_long(t.text.substr(0, dots), a) ||
        !detail::parse_long(t.text.substr(dots + 2), b) || a > b)
      throw ParseError(source, line_no, t.column, "bad range '" + t.text + "'");
    lo[k] = static_cast<Coord>(a);
    hi[k] = static_cast<Coord>(b);
  }
  Configuration c{Box(lo, hi), {}, static_cast<Spin>(i)};
  for (auto toks = next_tokens(); !toks.empty(); toks = next_tokens())
    for (const auto& t : toks) {
      const long v = integer(t);
      if (v < 1 || v > q) throw ParseError(source, line_no, t.column, "spin value outside 1..q");
      c.spins.push_back(static_cast<Spin>(v));
    }
  if (c.spins.size() != c.box.size())
    throw ParseError(source, line_no, 1,
                     "expected " + std::to_string(c.box.size()) + " spins, found " + std::to_string(c.spins.size()));
  return c;
}

/// Reads a configuration and checks it against the model (d, q, s and the
/// declared r).
inline Configuration load_configuration(const std::string& path, const ModelSpec& model) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open configuration file '" + path + "'");
  std::string header;
  std::streampos start = in.tellg();
  std::getline(in, header);
  in.seekg(start);
  auto c = parse_configuration(in, path);
  const auto toks = detail::tokenize_line(header);
  if (toks.size() == 6) {
    long r = 0, q = 0;
    detail::parse_long(toks[2].text, r);
    detail::parse_long(toks[3].text, q);
    if (r != model.r || q != model.q)
      throw InputError("configuration header (r=" + toks[2].text + ", q=" + toks[3].text +
                       ") does not match the model (r=" + std::to_string(model.r) + ", q=" + std::to_string(model.q) + ")");
  }
  c.validate(model);
  return c;
}

inline void write_configuration(std::ostream& out, const Configuration& c, const ModelSpec& m) {
  out << "config " << m.d << ' ' << m.r << ' ' << m.q << ' ' << m.s << ' ' << c.exterior << '\n';
  out << "box";
  for (int k = 0; k < c.box.dim(); ++k) out << ' ' << c.box.lower()[k] << ".." << c.box.upper()[k];
  out << '\n';
  const auto last = static_cast<std::size_t>(c.box.extent(c.box.dim() - 1));
  for (std::size_t i = 0; i < c.spins.size(); ++i) out << c.spins[i] << ((i + 1) % last == 0 ? '\n' : ' ');
}

inline void write_model(std::ostream& out, const ModelSpec& m) {
  out << "dims " << m.d << ' ' << m.r << ' ' << m.q << ' ' << m.s << '\n';
  char num[64];
  for (const auto& t : m.terms) {
    out << "term\noffsets ";
    for (std::size_t k = 0; k < t.shape().size(); ++k) {
      if (k) out << ';';
      out << '(';
      for (int a = 0; a < m.d; ++a) out << (a ? "," : "") << t.shape()[k][a];
      out << ')';
    }
    out << '\n';
    for (std::uint64_t code = 0; code < t.table().size(); ++code) {
      if (t.table()[code] == 0.0) continue;
      out << "entry";
      for (Spin v : t.codec().decode(code)) out << ' ' << v;
      std::snprintf(num, sizeof num, "%.17g", t.table()[code]);
      out << ' ' << num << '\n';
    }
    out << "end\n";
  }
}

/// Floats with 17 significant digits, so that values round-trip exactly.
inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// RFC 4180 CSV: header row first, fields quoted when they contain a comma,
/// quote or line break.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(&out), columns_(header.size()) {
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) throw std::logic_error("csv row width does not match header");
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) *out_ << ',';
      *out_ << quote(fields[k]);
    }
    *out_ << "\r\n";
  }

  static std::string quote(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string q = "\"";
    for (char ch : f) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  }

 private:
  std::ostream* out_;
  std::size_t columns_;
};

}  // namespace pscontour
