#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "graphgen/error.hpp"
#include "graphgen/graph.hpp"
#include "graphgen/store.hpp"

namespace graphgen {

// Tokens in the text formats are whitespace separated; these bytes are %XX-escaped.
inline std::string escape_token(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (c == ' ' || c == '=' || c == '%' || c == '\n' || c == '\r' || c == '\t') {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

inline std::string unescape_token(const std::string& s) {
  auto val = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && val(s[i + 1]) >= 0 && val(s[i + 2]) >= 0) {
      out.push_back(static_cast<char>(val(s[i + 1]) * 16 + val(s[i + 2])));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

namespace detail {

inline void write_props(std::ostream& os, const Props& p) {
  for (const auto& [k, v] : p) os << ' ' << escape_token(k) << '=' << escape_token(v);
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

}  // namespace detail

// Line-oriented condensed format. Only live reals are written, in index order, so
// a graph without tombstones round-trips with identical indices.
inline void write_condensed(const Graph& g, std::ostream& os) {
  std::vector<std::uint32_t> rmap(g.real_capacity(), 0);
  std::vector<std::uint32_t> vmap(g.virtual_capacity(), 0);
  os << "#REPR " << repr_name(g.repr()) << '\n';
  os << "#REAL\n";
  std::uint32_t k = 0;
  for (auto r : g.vertices()) {
    rmap[r] = k++;
    os << "R " << escape_token(g.id(r));
    detail::write_props(os, g.props(r));
    os << '\n';
  }
  os << "#VIRTUAL\n";
  k = 0;
  for (std::uint32_t v = 0; v < g.virtual_capacity(); ++v) {
    if (!g.virtual_alive(v)) continue;
    vmap[v] = k;
    os << "V " << k++ << ' ' << g.layer(v);
    if (!g.label(v).empty()) os << " label=" << escape_token(g.label(v));
    os << '\n';
  }
  auto name = [&](Node n) {
    return is_virtual(n) ? "v:" + std::to_string(vmap[vindex(n)]) : "r:" + escape_token(g.id(n));
  };
  os << "#EDGE\n";
  for (auto r : g.vertices())
    for (Node t : g.out(r)) {
      if (!is_virtual(t) && !g.alive(t)) continue;
      os << "E " << name(r) << ' ' << name(t);
      if (!is_virtual(t))
        if (const Props* p = g.edge_props(r, t)) detail::write_props(os, *p);
      os << '\n';
    }
  for (std::uint32_t v = 0; v < g.virtual_capacity(); ++v) {
    if (!g.virtual_alive(v)) continue;
    if (g.repr() == Repr::Dedup2) {
      for (Node w : g.specials(v))
        if (vindex(w) > v) os << "E " << name(vnode(v)) << ' ' << name(w) << '\n';
      continue;
    }
    for (Node t : g.out(vnode(v)))
      if (is_virtual(t) || g.alive(t)) os << "E " << name(vnode(v)) << ' ' << name(t) << '\n';
  }
  if (g.bitmap_count() > 0) {
    os << "#BITMAP\n";
    for (std::uint32_t v = 0; v < g.virtual_capacity(); ++v) {
      if (!g.virtual_alive(v)) continue;
      std::vector<std::pair<std::uint32_t, const Graph::Bitmap*>> entries;
      for (const auto& [src, bits] : g.bitmaps(v))
        if (g.alive(src)) entries.emplace_back(src, &bits);
      std::sort(entries.begin(), entries.end());
      for (const auto& [src, bits] : entries) {
        os << "B " << name(vnode(v)) << ' ' << name(src) << ' ';
        const auto& o = g.out(vnode(v));
        for (std::size_t i = 0; i < o.size(); ++i)
          if (is_virtual(o[i]) || g.alive(o[i])) os << ((*bits)[i] ? '1' : '0');
        os << '\n';
      }
    }
  }
}

inline std::string to_condensed_text(const Graph& g) {
  std::ostringstream os;
  write_condensed(g, os);
  return os.str();
}

inline Graph read_condensed(std::istream& is) {
  Graph g;
  enum { None, Real, Virtual, Edge, Bits } section = None;
  std::vector<std::uint32_t> vids;  // file vid -> graph index
  struct PendingBits {
    std::uint32_t v, src;
    std::string bits;
    int line;
  };
  std::vector<PendingBits> pending;
  std::vector<std::tuple<std::uint32_t, std::uint32_t, Props>> eprops;
  std::string line;
  int ln = 0;
  auto fail = [&](const std::string& what) -> ParseError { return ParseError(ln, 1, what); };
  auto parse_props = [&](const std::vector<std::string>& t, std::size_t from) {
    Props p;
    for (std::size_t i = from; i < t.size(); ++i) {
      auto eq = t[i].find('=');
      if (eq == std::string::npos) throw fail("expected key=value, got '" + t[i] + "'");
      p[unescape_token(t[i].substr(0, eq))] = unescape_token(t[i].substr(eq + 1));
    }
    return p;
  };
  auto node = [&](const std::string& tok) -> Node {
    if (tok.rfind("r:", 0) == 0) {
      auto f = g.find(unescape_token(tok.substr(2)));
      if (!f) throw fail("unknown real node '" + tok + "'");
      return *f;
    }
    if (tok.rfind("v:", 0) == 0) {
      auto n = parse_int(tok.substr(2));
      if (!n || *n < 0 || static_cast<std::size_t>(*n) >= vids.size()) throw fail("unknown virtual node '" + tok + "'");
      return vnode(vids[static_cast<std::size_t>(*n)]);
    }
    throw fail("node reference must start with r: or v:");
  };
  Repr repr = Repr::CDup;
  while (std::getline(is, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto t = detail::split_ws(line);
    if (t.empty()) continue;
    if (t[0] == "#REPR") {
      if (t.size() != 2 || !parse_repr(t[1])) throw fail("bad #REPR line");
      repr = *parse_repr(t[1]);
      g.set_repr(repr);
      continue;
    }
    if (t[0] == "#REAL") { section = Real; continue; }
    if (t[0] == "#VIRTUAL") { section = Virtual; continue; }
    if (t[0] == "#EDGE") { section = Edge; continue; }
    if (t[0] == "#BITMAP") { section = Bits; continue; }
    if (t[0][0] == '#') throw fail("unknown section '" + t[0] + "'");
    switch (section) {
      case Real:
        if (t[0] != "R" || t.size() < 2) throw fail("expected 'R <id>'");
        try {
          g.add_vertex(unescape_token(t[1]), parse_props(t, 2));
        } catch (const NameClash& e) {
          throw fail(e.what());
        }
        break;
      case Virtual: {
        if (t[0] != "V" || t.size() < 3) throw fail("expected 'V <vid> <layer>'");
        auto vid = parse_int(t[1]);
        auto layer = parse_int(t[2]);
        if (!vid || !layer || *vid != static_cast<std::int64_t>(vids.size()))
          throw fail("virtual ids must be consecutive from 0");
        auto p = parse_props(t, 3);
        vids.push_back(g.add_virtual(static_cast<int>(*layer), p.count("label") ? p["label"] : ""));
        break;
      }
      case Edge: {
        if (t[0] != "E" || t.size() < 3) throw fail("expected 'E <src> <dst>'");
        Node a = node(t[1]), b = node(t[2]);
        if (repr == Repr::Dedup2 && is_virtual(a) && is_virtual(b)) {
          g.add_special_raw(vindex(a), vindex(b));
        } else {
          if (repr == Repr::Dedup2 && is_virtual(a) && !is_virtual(b)) std::swap(a, b);
          g.add_edge_raw(a, b);
          if (repr == Repr::Dedup2 && is_virtual(b)) g.add_edge_raw(b, a);
        }
        if (t.size() > 3) {
          if (is_virtual(a) || is_virtual(b)) throw fail("only direct edges carry properties");
          eprops.emplace_back(a, b, parse_props(t, 3));
        }
        break;
      }
      case Bits: {
        if (t[0] != "B" || t.size() != 4) throw fail("expected 'B v:<vid> r:<src> <bits>'");
        Node v = node(t[1]), s = node(t[2]);
        if (!is_virtual(v) || is_virtual(s)) throw fail("bitmap needs a virtual node and a real source");
        pending.push_back({vindex(v), s, t[3], ln});
        break;
      }
      case None: throw fail("content before any section header");
    }
  }
  g.normalize();
  for (auto& [a, b, p] : eprops) g.set_edge_props(a, b, std::move(p));
  for (const auto& pb : pending) {
    Graph::Bitmap bits;
    for (char c : pb.bits) {
      if (c != '0' && c != '1') throw ParseError(pb.line, 1, "bitmap must be 0/1 characters");
      bits.push_back(c == '1');
    }
    if (bits.size() != g.out(vnode(pb.v)).size()) throw ParseError(pb.line, 1, "bitmap length differs from out-degree");
    g.set_bitmap(pb.v, pb.src, std::move(bits));
  }
  return g;
}

inline Graph read_condensed_text(const std::string& text) {
  std::istringstream is(text);
  return read_condensed(is);
}

inline void save_condensed(const Graph& g, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write '" + path.string() + "'");
  write_condensed(g, os);
}

inline Graph load_condensed(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open '" + path.string() + "'");
  return read_condensed(is);
}

// "src dst" per logical edge, sorted lexically. Returns the number of lines.
inline std::size_t write_edge_list(const Graph& g, std::ostream& os, std::size_t budget = Graph::kNoBudget) {
  std::vector<std::pair<std::string, std::string>> lines;
  for (auto r : g.vertices()) {
    g.for_each_neighbor(r, [&](std::uint32_t t) {
      lines.emplace_back(escape_token(g.id(r)), escape_token(g.id(t)));
      if (lines.size() > budget) throw BudgetExceeded(budget, lines.size());
    });
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& [a, b] : lines) os << a << ' ' << b << '\n';
  return lines.size();
}

inline std::string to_edge_list(const Graph& g, std::size_t budget = Graph::kNoBudget) {
  std::ostringstream os;
  write_edge_list(g, os, budget);
  return os.str();
}

}  // namespace graphgen
