#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "graphgen/error.hpp"
#include "graphgen/graph.hpp"
#include "graphgen/store.hpp"

namespace graphgen {

// ---- condensed graph generator (preferential attachment over virtual nodes) ----

struct GeneratorConfig {
  std::size_t n1 = 100;  // real nodes
  std::size_t n2 = 10;   // virtual nodes
  double m = 5;          // mean virtual-node size
  double sd = 0;
  std::uint64_t seed = 1;

  static GeneratorConfig from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    c.n1 = j.value("n1", c.n1);
    c.n2 = j.value("n2", c.n2);
    c.m = j.value("m", c.m);
    c.sd = j.value("sd", c.sd);
    c.seed = j.value("seed", c.seed);
    return c;
  }
  nlohmann::json to_json() const { return {{"n1", n1}, {"n2", n2}, {"m", m}, {"sd", sd}, {"seed", seed}}; }
};

namespace detail {

struct GenPiece {
  std::size_t parent;
  std::size_t size;
  bool from_split;
  std::size_t sibling;  // index of the other half, or npos
  std::vector<std::uint32_t> members;
};

inline std::vector<std::uint32_t> random_members(std::mt19937_64& rng, std::size_t n1, std::size_t k,
                                                 const std::unordered_set<std::uint32_t>& exclude) {
  std::vector<std::uint32_t> out;
  std::unordered_set<std::uint32_t> taken;
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n1 - 1));
  if (k + exclude.size() * 2 > n1) {
    // Dense request: sample from the explicit pool.
    std::vector<std::uint32_t> pool;
    for (std::uint32_t r = 0; r < n1; ++r)
      if (!exclude.count(r)) pool.push_back(r);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(k, pool.size()));
    return pool;
  }
  while (out.size() < k) {
    auto r = pick(rng);
    if (!exclude.count(r) && taken.insert(r).second) out.push_back(r);
  }
  return out;
}

}  // namespace detail

inline Graph generate_condensed(const GeneratorConfig& c) {
  if (c.n2 > 0 && c.n1 == 0) throw ConfigError("n2 > 0 requires at least one real node");
  if (c.m < 1 || c.sd < 0 || !std::isfinite(c.m) || !std::isfinite(c.sd))
    throw ConfigError("need m >= 1 and sd >= 0");
  std::mt19937_64 rng(c.seed);
  Graph g;
  for (std::size_t r = 0; r < c.n1; ++r) g.add_vertex(std::to_string(r));
  if (c.n2 == 0) return g;

  // 1. sizes from a rounded Gaussian, resampled into [1, n1]
  std::normal_distribution<double> gauss(c.m, c.sd);
  auto draw = [&]() -> std::size_t {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      double x = std::round(gauss(rng));
      if (x >= 1 && x <= static_cast<double>(c.n1)) return static_cast<std::size_t>(x);
      if (c.sd == 0) break;
    }
    throw ConfigError("virtual-node size distribution has no mass in [1, n1]");
  };
  std::vector<std::size_t> sizes(c.n2);
  for (auto& s : sizes) s = draw();

  // 2. split with probability size/n1 (capped)
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<detail::GenPiece> pieces;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < c.n2; ++i) {
    double p = std::min(static_cast<double>(sizes[i]) / static_cast<double>(c.n1), 0.9);
    if (sizes[i] >= 2 && unit(rng) < p) {
      std::size_t a = std::uniform_int_distribution<std::size_t>(1, sizes[i] - 1)(rng);
      std::size_t k = pieces.size();
      pieces.push_back({i, a, true, k + 1, {}});
      pieces.push_back({i, sizes[i] - a, true, k, {}});
    } else {
      pieces.push_back({i, sizes[i], false, npos, {}});
    }
  }
  std::vector<std::size_t> order(pieces.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::unordered_set<std::uint32_t>> nbrs(c.n1);
  auto attach = [&](detail::GenPiece& p) {
    for (auto a : p.members)
      for (auto b : p.members)
        if (a != b) nbrs[a].insert(b);
  };
  auto sibling_members = [&](const detail::GenPiece& p) {
    std::unordered_set<std::uint32_t> ex;
    if (p.sibling != npos) ex.insert(pieces[p.sibling].members.begin(), pieces[p.sibling].members.end());
    return ex;
  };

  // 3. initial 15% batch: uniform members
  const std::size_t batch = (pieces.size() * 15 + 99) / 100;
  for (std::size_t k = 0; k < batch; ++k) {
    auto& p = pieces[order[k]];
    p.members = detail::random_members(rng, c.n1, p.size, sibling_members(p));
    attach(p);
  }
  // 4. random (35% of split-derived) or preferential
  for (std::size_t k = batch; k < order.size(); ++k) {
    auto& p = pieces[order[k]];
    auto exclude = sibling_members(p);
    if (p.from_split && unit(rng) < 0.35) {
      p.members = detail::random_members(rng, c.n1, p.size, exclude);
      attach(p);
      continue;
    }
    std::vector<std::uint32_t> cand;
    for (std::uint32_t r = 0; r < c.n1; ++r)
      if (nbrs[r].size() >= p.size && !exclude.count(r)) cand.push_back(r);
    if (cand.empty()) {
      p.members = detail::random_members(rng, c.n1, p.size, exclude);
      attach(p);
      continue;
    }
    auto r = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
    std::vector<std::uint32_t> s;
    for (auto x : nbrs[r])
      if (!exclude.count(x)) s.push_back(x);
    std::sort(s.begin(), s.end());
    if (s.size() > p.size) {
      // Remove |s| - size nodes, each draw weighted by 1 - P_i over the survivors
      // (weighted sampling without replacement via exponential keys).
      double total = 0;
      for (auto x : s) total += static_cast<double>(nbrs[x].size()) * static_cast<double>(nbrs[x].size());
      std::vector<std::pair<double, std::uint32_t>> keyed;
      for (auto x : s) {
        double P = total > 0 ? static_cast<double>(nbrs[x].size()) * static_cast<double>(nbrs[x].size()) / total : 0;
        double w = std::max(1.0 - P, 1e-12);
        keyed.emplace_back(std::log(std::max(unit(rng), 1e-300)) / w, x);
      }
      std::sort(keyed.begin(), keyed.end(), std::greater<>());
      keyed.erase(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(s.size() - p.size));
      s.clear();
      for (const auto& kx : keyed) s.push_back(kx.second);
    } else if (s.size() < p.size) {
      for (auto x : s) exclude.insert(x);
      auto extra = detail::random_members(rng, c.n1, p.size - s.size(), exclude);
      s.insert(s.end(), extra.begin(), extra.end());
    }
    p.members = std::move(s);
    attach(p);
  }

  // 5. merge split halves into their original node
  std::vector<std::vector<std::uint32_t>> groups(c.n2);
  for (const auto& p : pieces) groups[p.parent].insert(groups[p.parent].end(), p.members.begin(), p.members.end());
  for (auto& m : groups) {
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    auto V = g.add_virtual(1);
    for (auto r : m) {
      g.add_edge_raw(Node{r}, vnode(V));
      g.add_edge_raw(vnode(V), Node{r});
    }
  }
  g.normalize();
  return g;
}

// ---- random DAG-shaped condensed graphs for property suites ----

struct RandomGraphConfig {
  std::size_t reals = 50;
  std::size_t virtuals = 10;
  int layers = 1;            // 1 or 2
  bool symmetric = false;    // single-layer only
  std::size_t min_size = 2, max_size = 8;
  double direct_fraction = 0.2;  // direct edges as a fraction of reals
  std::uint64_t seed = 1;
};

inline Graph generate_random_condensed(const RandomGraphConfig& c) {
  if (c.layers < 1 || c.layers > 2) throw ConfigError("layers must be 1 or 2");
  if (c.reals == 0) throw ConfigError("need at least one real node");
  std::mt19937_64 rng(c.seed);
  Graph g;
  for (std::size_t r = 0; r < c.reals; ++r) g.add_vertex("n" + std::to_string(r));
  std::uniform_int_distribution<std::uint32_t> R(0, static_cast<std::uint32_t>(c.reals - 1));
  std::uniform_int_distribution<std::size_t> S(c.min_size, std::max(c.min_size, c.max_size));
  auto some = [&](std::size_t k) {
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(R(rng));
    return out;
  };
  const bool sym = c.symmetric && c.layers == 1;
  std::size_t n_top = c.layers == 2 ? std::max<std::size_t>(1, c.virtuals / 2) : c.virtuals;
  std::size_t n_mid = c.virtuals - n_top;
  if (c.layers == 2 && n_mid == 0) n_mid = 1;
  std::vector<std::uint32_t> top, mid;
  for (std::size_t i = 0; i < n_top; ++i) top.push_back(g.add_virtual(1));
  for (std::size_t i = 0; i < n_mid && c.layers == 2; ++i) mid.push_back(g.add_virtual(2));
  for (auto V : top) {
    auto ins = some(S(rng));
    for (auto r : ins) g.add_edge_raw(Node{r}, vnode(V));
    if (sym) {
      for (auto r : ins) g.add_edge_raw(vnode(V), Node{r});
      continue;
    }
    if (c.layers == 2) {
      std::size_t k = 1 + rng() % 3;
      for (std::size_t i = 0; i < k; ++i) g.add_edge_raw(vnode(V), vnode(mid[rng() % mid.size()]));
      if (rng() % 3 == 0)
        for (auto r : some(1 + rng() % 3)) g.add_edge_raw(vnode(V), Node{r});
    } else {
      for (auto r : some(S(rng))) g.add_edge_raw(vnode(V), Node{r});
    }
  }
  for (auto W : mid)
    for (auto r : some(S(rng))) g.add_edge_raw(vnode(W), Node{r});
  auto directs = static_cast<std::size_t>(c.direct_fraction * static_cast<double>(c.reals));
  for (std::size_t i = 0; i < directs; ++i) {
    auto a = R(rng), b = R(rng);
    if (a == b) continue;
    g.add_edge_raw(Node{a}, Node{b});
    if (sym) g.add_edge_raw(Node{b}, Node{a});
  }
  g.normalize();
  return g;
}

// ---- relational tables with controlled join selectivity ----

struct TableGenConfig {
  std::string shape = "single";  // single | tpch-layered
  std::size_t rows = 10000;      // rows of the join table(s)
  std::size_t rows_b = 0;        // tpch-layered: rows of B (0 = rows)
  std::size_t nodes = 0;         // distinct node ids (0 = rows)
  std::vector<double> selectivities = {0.05};
  std::uint64_t seed = 1;

  static TableGenConfig from_json(const nlohmann::json& j) {
    TableGenConfig c;
    c.shape = j.value("shape", c.shape);
    c.rows = j.value("rows", c.rows);
    c.rows_b = j.value("rows_b", c.rows_b);
    c.nodes = j.value("nodes", c.nodes);
    c.selectivities = j.value("selectivities", c.selectivities);
    c.seed = j.value("seed", c.seed);
    return c;
  }
  nlohmann::json to_json() const {
    return {{"shape", shape}, {"rows", rows}, {"rows_b", rows_b}, {"nodes", nodes},
            {"selectivities", selectivities}, {"seed", seed}};
  }
};

struct GeneratedTables {
  std::string query;  // extraction program over the generated tables
  std::vector<std::string> tables;
};

namespace detail {

// Column of `rows` values with exactly `distinct` values, each in [0, distinct).
inline std::vector<std::int64_t> keyed_column(std::mt19937_64& rng, std::size_t rows, std::size_t distinct) {
  std::vector<std::int64_t> col(rows);
  for (std::size_t i = 0; i < distinct; ++i) col[i] = static_cast<std::int64_t>(i);
  std::uniform_int_distribution<std::int64_t> pick(0, static_cast<std::int64_t>(distinct) - 1);
  for (std::size_t i = distinct; i < rows; ++i) col[i] = pick(rng);
  std::shuffle(col.begin(), col.end(), rng);
  return col;
}

inline std::size_t distinct_for(double sel, std::size_t rows) {
  if (!(sel > 0 && sel <= 1)) throw ConfigError("selectivity must be in (0, 1]");
  auto d = static_cast<std::size_t>(std::ceil(sel * static_cast<double>(rows) - 1e-9));
  if (d == 0 || d > rows) throw ConfigError("selectivity infeasible for the row count");
  return d;
}

}  // namespace detail

inline GeneratedTables generate_tables(const TableGenConfig& c, Catalog& cat) {
  if (c.rows == 0) throw ConfigError("rows must be positive");
  std::mt19937_64 rng(c.seed);
  const std::size_t nodes = c.nodes ? c.nodes : c.rows;
  if (nodes > c.rows) throw ConfigError("nodes cannot exceed rows");
  GeneratedTables out;
  auto node_table = [&]() {
    std::vector<std::vector<Value>> rows;
    for (std::size_t i = 0; i < nodes; ++i) rows.push_back({Value{static_cast<std::int64_t>(i)}});
    cat.add_table("N", {{"id", ColumnType::Integer}}, rows);
    out.tables.push_back("N");
  };
  auto id_col = [&](std::size_t rows) {
    std::vector<std::int64_t> ids(rows);
    for (std::size_t i = 0; i < rows; ++i) ids[i] = static_cast<std::int64_t>(i % nodes);
    std::shuffle(ids.begin(), ids.end(), rng);
    return ids;
  };
  if (c.shape == "single") {
    if (c.selectivities.size() != 1) throw ConfigError("single shape takes one selectivity");
    auto d = detail::distinct_for(c.selectivities[0], c.rows);
    auto ids = id_col(c.rows);
    auto keys = detail::keyed_column(rng, c.rows, d);
    std::vector<std::vector<Value>> rows;
    for (std::size_t i = 0; i < c.rows; ++i) rows.push_back({Value{ids[i]}, Value{keys[i]}});
    node_table();
    cat.add_table("A", {{"id", ColumnType::Integer}, {"k", ColumnType::Integer}}, rows);
    out.tables.push_back("A");
    out.query = "Nodes(ID) :- N(ID).\nEdges(ID1, ID2) :- A(ID1, K), A(ID2, K).\n";
    return out;
  }
  if (c.shape == "tpch-layered") {
    if (c.selectivities.size() != 3) throw ConfigError("tpch-layered shape takes three selectivities");
    if (c.selectivities[0] != c.selectivities[2])
      throw ConfigError("tpch-layered: first and last joins share columns and need equal selectivity");
    const std::size_t rb = c.rows_b ? c.rows_b : c.rows;
    const std::size_t da = detail::distinct_for(c.selectivities[0], c.rows);
    const std::size_t db = detail::distinct_for(c.selectivities[0], rb);
    const std::size_t dbb = detail::distinct_for(c.selectivities[1], rb);
    auto ids = id_col(c.rows);
    auto ak = detail::keyed_column(rng, c.rows, da);
    auto bk = detail::keyed_column(rng, rb, db);
    auto bj = detail::keyed_column(rng, rb, dbb);
    std::vector<std::vector<Value>> arows, brows;
    for (std::size_t i = 0; i < c.rows; ++i) arows.push_back({Value{ids[i]}, Value{ak[i]}});
    for (std::size_t i = 0; i < rb; ++i) brows.push_back({Value{bk[i]}, Value{bj[i]}});
    node_table();
    cat.add_table("A", {{"id", ColumnType::Integer}, {"k", ColumnType::Integer}}, arows);
    cat.add_table("B", {{"k", ColumnType::Integer}, {"j", ColumnType::Integer}}, brows);
    out.tables.push_back("A");
    out.tables.push_back("B");
    out.query = "Nodes(ID) :- N(ID).\nEdges(ID1, ID2) :- A(ID1, K1), B(K1, J), B(K2, J), A(ID2, K2).\n";
    return out;
  }
  throw ConfigError("unknown table shape '" + c.shape + "'");
}

// ---- students x courses enrollments ----

struct EnrollmentConfig {
  std::size_t students = 3000;
  std::size_t courses = 285;
  double mean = 112, sd = 20;
  std::uint64_t seed = 1;

  static EnrollmentConfig from_json(const nlohmann::json& j) {
    EnrollmentConfig c;
    c.students = j.value("students", c.students);
    c.courses = j.value("courses", c.courses);
    c.mean = j.value("mean", c.mean);
    c.sd = j.value("sd", c.sd);
    c.seed = j.value("seed", c.seed);
    return c;
  }
  nlohmann::json to_json() const {
    return {{"students", students}, {"courses", courses}, {"mean", mean}, {"sd", sd}, {"seed", seed}};
  }
};

inline GeneratedTables generate_enrollments(const EnrollmentConfig& c, Catalog& cat) {
  if (c.students == 0) throw ConfigError("need at least one student");
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> gauss(c.mean, c.sd);
  std::vector<std::vector<Value>> srows, erows;
  for (std::size_t s = 0; s < c.students; ++s) srows.push_back({Value{static_cast<std::int64_t>(s)}});
  std::vector<std::int64_t> pool(c.students);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t k = 0; k < c.courses; ++k) {
    double x = std::round(gauss(rng));
    auto size = static_cast<std::size_t>(std::clamp(x, 1.0, static_cast<double>(c.students)));
    for (std::size_t i = 0; i < size; ++i) {
      std::size_t j = i + std::uniform_int_distribution<std::size_t>(0, pool.size() - 1 - i)(rng);
      std::swap(pool[i], pool[j]);
      erows.push_back({Value{pool[i]}, Value{static_cast<std::int64_t>(k)}});
    }
  }
  cat.add_table("Student", {{"id", ColumnType::Integer}}, srows);
  cat.add_table("Enroll", {{"student", ColumnType::Integer}, {"course", ColumnType::Integer}}, erows);
  return {"Nodes(ID) :- Student(ID).\nEdges(ID1, ID2) :- Enroll(ID1, C), Enroll(ID2, C).\n", {"Student", "Enroll"}};
}

}  // namespace graphgen
