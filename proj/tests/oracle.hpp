#pragma once

// Independent reference implementations used by the unit and acceptance tests.
// None of these call into the traversal or join code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "graphgen/graphgen.hpp"

namespace oracle {

using namespace graphgen;
using EdgeSet = std::set<std::pair<std::string, std::string>>;

// Set-at-a-time nested-loop evaluation of every Edges rule over rendered values.
// Partial bindings are kept in a std::set, projected onto the variables still needed.
// Returns (ID1, ID2) pairs with self-pairs dropped.
inline EdgeSet brute_force_edges(const ExtractionProgram& p, const Catalog& cat) {
  EdgeSet out;
  // Type tag keeps 1 and "1" apart.
  auto render = [](const Value& v) { return (std::holds_alternative<std::int64_t>(v) ? "i:" : "s:") + to_string(v); };
  for (const auto& rule : p.edges_rules) {
    std::vector<std::string> vars;  // columns of each binding row
    std::set<std::vector<std::string>> rows = {{}};
    for (std::size_t ai = 0; ai < rule.body.size(); ++ai) {
      const Atom& atom = rule.body[ai];
      const Table& t = cat.table(atom.relation);
      std::vector<std::string> nvars = vars;
      for (const auto& term : atom.args)
        if (term.is_var() && std::find(nvars.begin(), nvars.end(), term.text) == nvars.end()) nvars.push_back(term.text);
      // Variables needed after this atom.
      std::set<std::string> need(rule.head.begin(), rule.head.end());
      for (std::size_t k = ai + 1; k < rule.body.size(); ++k)
        for (const auto& term : rule.body[k].args)
          if (term.is_var()) need.insert(term.text);
      std::vector<std::size_t> keep;
      std::vector<std::string> kvars;
      for (std::size_t i = 0; i < nvars.size(); ++i)
        if (need.count(nvars[i])) {
          keep.push_back(i);
          kvars.push_back(nvars[i]);
        }
      // Index the atom's rows on its first already-bound variable, if any.
      std::ptrdiff_t key_col = -1, key_pos = -1;
      for (std::size_t c = 0; c < atom.args.size() && key_col < 0; ++c)
        if (atom.args[c].is_var()) {
          auto it = std::find(vars.begin(), vars.end(), atom.args[c].text);
          if (it != vars.end()) {
            key_col = static_cast<std::ptrdiff_t>(c);
            key_pos = it - vars.begin();
          }
        }
      std::multimap<std::string, std::size_t> index;
      for (std::size_t r = 0; r < t.rows(); ++r)
        index.emplace(key_col < 0 ? std::string() : render(t.at(r, static_cast<std::size_t>(key_col))), r);
      std::set<std::vector<std::string>> next;
      for (const auto& b : rows) {
        auto range = index.equal_range(key_col < 0 ? std::string() : b[static_cast<std::size_t>(key_pos)]);
        for (auto it = range.first; it != range.second; ++it) {
          std::vector<std::string> nb = b;
          nb.resize(nvars.size());
          std::vector<char> set(nvars.size(), 0);
          for (std::size_t i = 0; i < vars.size(); ++i) set[i] = 1;
          bool ok = true;
          for (std::size_t c = 0; c < atom.args.size() && ok; ++c) {
            const Term& term = atom.args[c];
            const Value& v = t.at(it->second, c);
            if (!term.is_var()) {
              ok = term.kind == Term::Kind::Int
                       ? (std::holds_alternative<std::int64_t>(v) && std::get<std::int64_t>(v) == term.ival)
                       : (std::holds_alternative<std::string>(v) && std::get<std::string>(v) == term.text);
              continue;
            }
            auto i = static_cast<std::size_t>(std::find(nvars.begin(), nvars.end(), term.text) - nvars.begin());
            std::string s = render(v);
            if (!set[i]) {
              nb[i] = s;
              set[i] = 1;
            } else if (nb[i] != s) {
              ok = false;
            }
          }
          if (!ok) continue;
          std::vector<std::string> proj;
          for (auto i : keep) proj.push_back(nb[i]);
          next.insert(std::move(proj));
        }
      }
      rows = std::move(next);
      vars = kvars;
    }
    const auto i1 = static_cast<std::size_t>(std::find(vars.begin(), vars.end(), rule.head[0]) - vars.begin());
    const auto i2 = static_cast<std::size_t>(std::find(vars.begin(), vars.end(), rule.head[1]) - vars.begin());
    for (const auto& b : rows)
      if (b[i1] != b[i2]) out.emplace(b[i1].substr(2), b[i2].substr(2));
  }
  return out;
}

// Path multiplicity per ordered pair of distinct live reals, by explicit path
// enumeration over physical edges. Bitmaps and DEDUP-2 specials are honored.
inline std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> path_counts(const Graph& g) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> cnt;
  for (auto s : g.vertices()) {
    auto hit = [&](Node x) {
      if (!is_virtual(x) && x != s && g.alive(x)) ++cnt[{s, x}];
    };
    if (g.repr() == Repr::Dedup2) {
      for (Node n : g.out(s)) {
        if (!is_virtual(n)) {
          hit(n);
          continue;
        }
        for (Node x : g.out(n)) hit(x);
        for (Node w : g.specials(vindex(n)))
          for (Node x : g.out(w)) hit(x);
      }
      continue;
    }
    std::function<void(Node)> walk = [&](Node v) {
      const auto& o = g.out(v);
      const Graph::Bitmap* bits = g.repr() == Repr::Bitmap ? g.bitmap(vindex(v), s) : nullptr;
      for (std::size_t i = 0; i < o.size(); ++i) {
        if (bits && !(*bits)[i]) continue;
        if (is_virtual(o[i])) walk(o[i]);
        else hit(o[i]);
      }
    };
    for (Node n : g.out(s)) {
      if (is_virtual(n)) walk(n);
      else hit(n);
    }
  }
  return cnt;
}

inline EdgeSet logical_edges(const Graph& g) {
  EdgeSet out;
  for (const auto& [k, n] : path_counts(g)) out.emplace(g.id(k.first), g.id(k.second));
  return out;
}

inline std::size_t duplicated_pairs(const Graph& g) {
  std::size_t d = 0;
  for (const auto& [k, n] : path_counts(g)) d += n > 1;
  return d;
}

// Edge set as reported by the graph API's logical neighbors.
inline EdgeSet api_edges(const Graph& g) {
  EdgeSet out;
  for (auto r : g.vertices())
    for (auto t : g.neighbor_list(r)) out.emplace(g.id(r), g.id(t));
  return out;
}

// Smallest number of sets covering `universe` (elements outside every set ignored).
inline std::size_t min_cover(const std::vector<std::vector<std::uint32_t>>& sets, const std::set<std::uint32_t>& universe) {
  std::set<std::uint32_t> coverable;
  for (const auto& s : sets)
    for (auto x : s)
      if (universe.count(x)) coverable.insert(x);
  const std::size_t n = sets.size();
  std::size_t best = n;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    auto k = static_cast<std::size_t>(__builtin_popcount(mask));
    if (k >= best) continue;
    std::set<std::uint32_t> got;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1)
        for (auto x : sets[i])
          if (coverable.count(x)) got.insert(x);
    if (got.size() == coverable.size()) best = k;
  }
  return coverable.empty() ? 0 : best;
}

inline double harmonic(std::size_t n) {
  double h = 0;
  for (std::size_t i = 1; i <= n; ++i) h += 1.0 / static_cast<double>(i);
  return h;
}

// Dense power iteration on an explicit edge set.
inline std::map<std::string, double> pagerank(const std::vector<std::string>& ids, const EdgeSet& edges,
                                              double alpha = 0.85, int iters = 20) {
  const std::size_t n = ids.size();
  std::map<std::string, std::size_t> at;
  for (std::size_t i = 0; i < n; ++i) at[ids[i]] = i;
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& [a, b] : edges) out[at[a]].push_back(at[b]);
  std::vector<double> pr(n, 1.0 / static_cast<double>(n)), nx(n);
  for (int it = 0; it < iters; ++it) {
    double dangling = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (out[i].empty()) dangling += pr[i];
    std::fill(nx.begin(), nx.end(), (1 - alpha) / static_cast<double>(n) + alpha * dangling / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (auto j : out[i]) nx[j] += alpha * pr[i] / static_cast<double>(out[i].size());
    pr.swap(nx);
  }
  std::map<std::string, double> res;
  for (std::size_t i = 0; i < n; ++i) res[ids[i]] = pr[i];
  return res;
}

// Union-find components over an undirected closure; label = smallest member id.
inline std::map<std::string, std::string> components(const std::vector<std::string>& ids, const EdgeSet& edges,
                                                     const std::function<bool(const std::string&, const std::string&)>& less) {
  std::map<std::string, std::string> parent;
  for (const auto& i : ids) parent[i] = i;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (const auto& [a, b] : edges) {
    auto ra = find(a), rb = find(b);
    if (ra == rb) continue;
    if (less(ra, rb)) parent[rb] = ra;
    else parent[ra] = rb;
  }
  std::map<std::string, std::string> out;
  for (const auto& i : ids) out[i] = find(i);
  return out;
}

// Random extraction scenario: small tables plus a random chain or non-chain query.
struct Scenario {
  Catalog cat;
  std::string dsl;
};

inline Scenario random_scenario(std::uint64_t seed, int max_rows = 400) {
  std::mt19937_64 rng(seed);
  Scenario sc;
  auto U = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int nodes = U(5, 60);
  {
    std::vector<std::vector<Value>> rows;
    for (int i = 0; i < nodes; ++i) rows.push_back({Value{std::int64_t{i}}, Value{std::string("p") + std::to_string(i % 3)}});
    sc.cat.add_table("N", {{"id", ColumnType::Integer}, {"kind", ColumnType::String}}, rows);
  }
  const int ntab = U(1, 3);
  for (int t = 0; t < ntab; ++t) {
    const int rows_n = U(1, max_rows);
    const int keys = U(1, std::min(30, nodes));  // keys double as node ids in the direct shape
    std::vector<std::vector<Value>> rows;
    for (int r = 0; r < rows_n; ++r)
      rows.push_back({Value{std::int64_t{U(0, nodes - 1)}}, Value{std::int64_t{U(0, keys - 1)}},
                      Value{std::int64_t{U(0, keys - 1)}}});
    sc.cat.add_table("T" + std::to_string(t), {{"a", ColumnType::Integer}, {"b", ColumnType::Integer}, {"c", ColumnType::Integer}}, rows);
  }
  auto tab = [&]() { return "T" + std::to_string(U(0, ntab - 1)); };
  std::string dsl = U(0, 3) == 0 ? "Nodes(ID, K) :- N(ID, K).\n" : "Nodes(ID) :- N(ID, _k).\n";
  const int n_rules = U(1, 2);
  for (int r = 0; r < n_rules; ++r) {
    const int shape = U(0, 5);
    std::string body;
    switch (shape) {
      case 0:  // direct relation
        body = tab() + "(ID1, ID2, _u)";
        break;
      case 1:  // co-membership
        body = tab() + "(ID1, X, _u), " + tab() + "(ID2, X, _w)";
        break;
      case 2:  // two-hop chain
        body = tab() + "(ID1, X, _u), " + tab() + "(Y, X, Z), " + tab() + "(ID2, Z, _w)";
        break;
      case 3:  // composite join key
        body = tab() + "(ID1, X, Y), " + tab() + "(ID2, X, Y)";
        break;
      case 4:  // chain with a constant predicate
        body = tab() + "(ID1, X, _u), " + tab() + "(ID2, X, " + std::to_string(U(0, 5)) + ")";
        break;
      default:  // not a chain: variable shared by three atoms
        body = tab() + "(ID1, X, _u), " + tab() + "(Q, X, _v), " + tab() + "(ID2, X, _w)";
        break;
    }
    dsl += "Edges(ID1, ID2) :- " + body + ".\n";
  }
  sc.dsl = dsl;
  return sc;
}

}  // namespace oracle
