#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "graphgen/error.hpp"
#include "graphgen/graph.hpp"

namespace graphgen {

struct Ordering {
  enum Kind { Random, AscDup, DescDup, AscDeg, DescDeg } kind = Random;
  std::uint64_t seed = 0;

  // rand:<seed> | asc-dup | desc-dup | asc-deg | desc-deg
  static Ordering parse(const std::string& s) {
    Ordering o;
    if (s.rfind("rand", 0) == 0) {
      o.kind = Random;
      if (s.size() > 4) {
        if (s[4] != ':') throw ConfigError("bad ordering '" + s + "'");
        try {
          std::size_t used = 0;
          o.seed = std::stoull(s.substr(5), &used);
          if (used != s.size() - 5) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw ConfigError("bad ordering seed in '" + s + "'");
        }
      }
    } else if (s == "asc-dup") o.kind = AscDup;
    else if (s == "desc-dup") o.kind = DescDup;
    else if (s == "asc-deg") o.kind = AscDeg;
    else if (s == "desc-deg") o.kind = DescDeg;
    else throw ConfigError("unknown ordering '" + s + "'");
    return o;
  }
  std::string str() const {
    switch (kind) {
      case Random: return "rand:" + std::to_string(seed);
      case AscDup: return "asc-dup";
      case DescDup: return "desc-dup";
      case AscDeg: return "asc-deg";
      case DescDeg: return "desc-deg";
    }
    return "?";
  }
};

struct DuplicationReport {
  std::size_t count = 0;  // ordered pairs of distinct reals with >= 2 paths
  std::uint64_t max_multiplicity = 0;
  std::vector<std::pair<std::string, std::string>> samples;
  std::vector<std::size_t> per_node;  // duplicated pairs per source, by real index

  nlohmann::json to_json() const {
    nlohmann::json s = nlohmann::json::array();
    for (const auto& [a, b] : samples) s.push_back({a, b});
    return {{"duplicated_pairs", count}, {"max_multiplicity", max_multiplicity}, {"samples", s}};
  }
};

namespace detail {

inline const Node* real_end(const std::vector<Node>& l) {
  return l.data() + (std::lower_bound(l.begin(), l.end(), kVirtualBit) - l.begin());
}

inline std::vector<std::uint32_t> virtual_part(const std::vector<Node>& l) {
  std::vector<std::uint32_t> out;
  for (auto it = std::lower_bound(l.begin(), l.end(), kVirtualBit); it != l.end(); ++it) out.push_back(vindex(*it));
  return out;
}

inline std::vector<Node> intersect(const std::vector<Node>& a, const std::vector<Node>& b) {
  std::vector<Node> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

template <class F>
void parallel_chunks(std::size_t n, unsigned workers, F&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2) {
    fn(std::size_t{0}, n, 0u);
    return;
  }
  std::vector<std::thread> ts;
  std::size_t chunk = (n + workers - 1) / workers;
  std::exception_ptr err;
  std::mutex m;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t b = w * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    ts.emplace_back([&, b, e, w] {
      try {
        fn(b, e, w);
      } catch (...) {
        std::lock_guard<std::mutex> lk(m);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : ts) t.join();
  if (err) std::rethrow_exception(err);
}

inline void require_input(const Graph& g, const char* algo) {
  if (g.repr() != Repr::CDup && g.repr() != Repr::Exp)
    throw UnsupportedShape(std::string(algo) + " expects a C-DUP graph, got " + repr_name(g.repr()));
}

}  // namespace detail

// Exact path-multiplicity census per ordered pair of distinct reals. Bitmaps are
// honored for BITMAP graphs; DEDUP-2 counts one path per member hit.
inline DuplicationReport check_duplication(const Graph& g, std::size_t max_samples = 10) {
  DuplicationReport rep;
  rep.per_node.assign(g.real_capacity(), 0);
  const std::size_t nr = g.real_capacity(), nv = g.virtual_capacity();
  std::vector<std::uint64_t> tcount(nr, 0), vcount(nv, 0);
  std::vector<char> vmark(nv, 0);
  std::vector<std::uint32_t> touched_r, touched_v;
  std::vector<std::uint32_t> rank(nv, 0);
  if (g.repr() != Repr::Dedup2) {
    auto topo = g.virtual_topo_order();
    for (std::uint32_t i = 0; i < topo.size(); ++i) rank[topo[i]] = i;
  }
  auto add_t = [&](std::uint32_t x, std::uint64_t c) {
    if (c == 0) return;
    if (tcount[x] == 0) touched_r.push_back(x);
    tcount[x] += c;
  };
  for (auto s : g.vertices()) {
    const auto& ro = g.out(s);
    for (const Node* p = ro.data(); p != detail::real_end(ro); ++p) add_t(*p, 1);
    if (g.repr() == Repr::Dedup2) {
      for (auto V : detail::virtual_part(ro)) {
        for (Node x : g.out(vnode(V))) add_t(x, 1);
        for (Node w : g.specials(V))
          for (Node x : g.out(w)) add_t(x, 1);
      }
    } else {
      // Discover reachable virtuals, then push path counts in topological order.
      for (auto V : detail::virtual_part(ro)) {
        if (!vmark[V]) {
          vmark[V] = 1;
          touched_v.push_back(V);
        }
        vcount[V] += 1;
      }
      for (std::size_t i = 0; i < touched_v.size(); ++i) {
        for (Node c : g.out(vnode(touched_v[i])))
          if (is_virtual(c) && !vmark[vindex(c)]) {
            vmark[vindex(c)] = 1;
            touched_v.push_back(vindex(c));
          }
      }
      std::sort(touched_v.begin(), touched_v.end(), [&](auto a, auto b) { return rank[a] < rank[b]; });
      const bool bm = g.repr() == Repr::Bitmap;
      for (auto V : touched_v) {
        std::uint64_t c = vcount[V];
        if (c == 0) continue;
        const auto& o = g.out(vnode(V));
        const Graph::Bitmap* bits = bm ? g.bitmap(V, s) : nullptr;
        for (std::size_t i = 0; i < o.size(); ++i) {
          if (bits && !(*bits)[i]) continue;
          if (is_virtual(o[i])) vcount[vindex(o[i])] += c;
          else add_t(o[i], c);
        }
      }
    }
    for (auto x : touched_r) {
      if (x != s && g.alive(x) && tcount[x] >= 2) {
        ++rep.count;
        ++rep.per_node[s];
        rep.max_multiplicity = std::max(rep.max_multiplicity, tcount[x]);
        if (rep.samples.size() < max_samples) rep.samples.emplace_back(g.id(s), g.id(x));
      }
      tcount[x] = 0;
    }
    touched_r.clear();
    for (auto V : touched_v) {
      vcount[V] = 0;
      vmark[V] = 0;
    }
    touched_v.clear();
  }
  return rep;
}

// ---- orderings ----

namespace detail {

template <class Key>
std::vector<std::uint32_t> sort_by_key(std::vector<std::uint32_t> items, Key key, bool desc) {
  std::stable_sort(items.begin(), items.end(), [&](std::uint32_t a, std::uint32_t b) {
    auto ka = key(a), kb = key(b);
    if (ka != kb) return desc ? ka > kb : ka < kb;
    return a < b;
  });
  return items;
}

inline std::vector<std::uint32_t> live_virtuals(const Graph& g) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t v = 0; v < g.virtual_capacity(); ++v)
    if (g.virtual_alive(v)) out.push_back(v);
  return out;
}

}  // namespace detail

inline std::vector<std::uint32_t> order_reals(const Graph& g, const Ordering& o) {
  auto items = g.vertices();
  switch (o.kind) {
    case Ordering::Random: {
      std::mt19937_64 rng(o.seed);
      std::shuffle(items.begin(), items.end(), rng);
      return items;
    }
    case Ordering::AscDup:
    case Ordering::DescDup: {
      auto rep = check_duplication(g, 0);
      return detail::sort_by_key(items, [&](std::uint32_t r) { return rep.per_node[r]; }, o.kind == Ordering::DescDup);
    }
    case Ordering::AscDeg:
    case Ordering::DescDeg:
      return detail::sort_by_key(items, [&](std::uint32_t r) { return g.out(r).size(); }, o.kind == Ordering::DescDeg);
  }
  return items;
}

inline std::vector<std::uint32_t> order_virtuals(const Graph& g, const Ordering& o) {
  auto items = detail::live_virtuals(g);
  switch (o.kind) {
    case Ordering::Random: {
      std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
      std::shuffle(items.begin(), items.end(), rng);
      return items;
    }
    case Ordering::AscDup:
    case Ordering::DescDup: {
      auto rep = check_duplication(g, 0);
      std::vector<std::size_t> key(g.virtual_capacity(), 0);
      for (auto v : items)
        for (Node s : g.in(vnode(v)))
          if (!is_virtual(s)) key[v] += rep.per_node[s];
      return detail::sort_by_key(items, [&](std::uint32_t v) { return key[v]; }, o.kind == Ordering::DescDup);
    }
    case Ordering::AscDeg:
    case Ordering::DescDeg:
      return detail::sort_by_key(
          items, [&](std::uint32_t v) { return g.in(vnode(v)).size() + g.out(vnode(v)).size(); },
          o.kind == Ordering::DescDeg);
  }
  return items;
}

// ---- BITMAP-1 ----

// rank[v] gives the processing priority of virtual node v (lower first).
inline Graph bitmap1_ranked(const Graph& in, const std::vector<std::uint32_t>& rank, unsigned workers = 1) {
  detail::require_input(in, "bitmap1");
  Graph g = in;
  g.clear_bitmaps();
  auto reals = g.vertices();
  using Entry = std::tuple<std::uint32_t, std::uint32_t, Graph::Bitmap>;
  std::vector<std::vector<Entry>> results(std::max(1u, workers));
  detail::parallel_chunks(reals.size(), workers, [&](std::size_t b, std::size_t e, unsigned w) {
    auto& outv = results[w];
    std::vector<char> seen(g.real_capacity(), 0), visited(g.virtual_capacity(), 0);
    std::vector<std::uint32_t> touched_r, touched_v;
    for (std::size_t i = b; i < e; ++i) {
      std::uint32_t u = reals[i];
      const auto& ro = g.out(u);
      for (const Node* p = ro.data(); p != detail::real_end(ro); ++p) {
        seen[*p] = 1;
        touched_r.push_back(*p);
      }
      auto by_rank = [&](std::vector<std::uint32_t> vs) {
        std::sort(vs.begin(), vs.end(), [&](auto a, auto c) { return rank[a] != rank[c] ? rank[a] < rank[c] : a < c; });
        return vs;
      };
      auto visit = [&](auto&& self, std::uint32_t V) -> void {
        visited[V] = 1;
        touched_v.push_back(V);
        const auto& o = g.out(vnode(V));
        Graph::Bitmap bits(o.size(), true);
        bool has_real = false, any_zero = false;
        std::vector<std::pair<std::uint32_t, std::size_t>> kids;
        for (std::size_t k = 0; k < o.size(); ++k) {
          if (is_virtual(o[k])) {
            kids.emplace_back(vindex(o[k]), k);
            continue;
          }
          has_real = true;
          if (seen[o[k]]) {
            bits[k] = false;
            any_zero = true;
          } else {
            seen[o[k]] = 1;
            touched_r.push_back(o[k]);
          }
        }
        std::sort(kids.begin(), kids.end(), [&](const auto& a, const auto& c) {
          return rank[a.first] != rank[c.first] ? rank[a.first] < rank[c.first] : a.first < c.first;
        });
        for (const auto& [c, k] : kids) {
          if (visited[c]) {
            bits[k] = false;  // reached before via another path
            any_zero = true;
          } else {
            self(self, c);
          }
        }
        if (has_real || any_zero) outv.emplace_back(V, u, std::move(bits));
      };
      for (auto V : by_rank(detail::virtual_part(ro)))
        if (!visited[V]) visit(visit, V);
      for (auto x : touched_r) seen[x] = 0;
      for (auto V : touched_v) visited[V] = 0;
      touched_r.clear();
      touched_v.clear();
    }
  });
  for (auto& r : results)
    for (auto& [V, u, bits] : r) g.set_bitmap(V, u, std::move(bits));
  g.set_repr(Repr::Bitmap);
  return g;
}

inline Graph bitmap1(const Graph& in, const Ordering& ord, unsigned workers = 1) {
  auto order = order_virtuals(in, ord);
  std::vector<std::uint32_t> rank(in.virtual_capacity(), 0);
  for (std::uint32_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
  return bitmap1_ranked(in, rank, workers);
}

// ---- BITMAP-2 ----

struct Bitmap2Stats {
  std::vector<std::uint32_t> kept;        // per real index: first-layer virtual nodes kept
  std::vector<std::uint32_t> candidates;  // per real index: first-layer virtual nodes before
};

namespace detail {

// Reals reachable from each virtual node, sorted.
inline std::vector<std::vector<std::uint32_t>> virtual_reach(const Graph& g) {
  auto topo = g.virtual_topo_order();
  std::vector<std::vector<std::uint32_t>> reach(g.virtual_capacity());
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    std::uint32_t V = *it;
    if (!g.virtual_alive(V)) continue;
    std::vector<std::uint32_t> r;
    for (Node c : g.out(vnode(V))) {
      if (is_virtual(c)) r.insert(r.end(), reach[vindex(c)].begin(), reach[vindex(c)].end());
      else if (g.alive(c)) r.push_back(c);
    }
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    reach[V] = std::move(r);
  }
  return reach;
}

}  // namespace detail

inline Graph bitmap2(const Graph& in, const Ordering& ord, unsigned workers = 1, Bitmap2Stats* stats = nullptr) {
  detail::require_input(in, "bitmap2");
  Graph g = in;
  g.clear_bitmaps();
  const auto reach = detail::virtual_reach(g);
  auto reals = order_reals(g, ord);
  using Entry = std::tuple<std::uint32_t, std::uint32_t, Graph::Bitmap>;
  struct Out {
    std::vector<Entry> bitmaps;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> dropped;  // (u, V)
    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> counts;
  };
  std::vector<Out> results(std::max(1u, workers));
  detail::parallel_chunks(reals.size(), workers, [&](std::size_t b, std::size_t e, unsigned w) {
    auto& res = results[w];
    std::vector<char> covered(g.real_capacity(), 0), visited(g.virtual_capacity(), 0);
    std::vector<std::uint32_t> touched_r, touched_v;
    for (std::size_t i = b; i < e; ++i) {
      const std::uint32_t u = reals[i];
      auto cover = [&](std::uint32_t x) {
        covered[x] = 1;
        touched_r.push_back(x);
      };
      auto gain = [&](std::uint32_t V) {
        std::uint32_t n = 0;
        for (auto x : reach[V]) n += (!covered[x] && x != u) ? 1 : 0;
        return n;
      };
      const auto& ro = g.out(u);
      for (const Node* p = ro.data(); p != detail::real_end(ro); ++p) cover(*p);
      auto first = detail::virtual_part(ro);
      // Lazy greedy set cover: stored gains are upper bounds.
      using QE = std::pair<std::uint32_t, std::int64_t>;  // (gain, -index)
      std::priority_queue<QE> pq;
      for (auto V : first) pq.emplace(gain(V), -static_cast<std::int64_t>(V));
      std::vector<std::uint32_t> picked;
      std::vector<std::uint32_t> tmp_cover;
      while (!pq.empty()) {
        auto [gst, nidx] = pq.top();
        pq.pop();
        if (gst == 0) break;
        auto V = static_cast<std::uint32_t>(-nidx);
        auto gnow = gain(V);
        if (gnow == gst) {
          picked.push_back(V);
          for (auto x : reach[V])
            if (!covered[x] && x != u) {
              cover(x);
              tmp_cover.push_back(x);
            }
        } else if (gnow > 0) {
          pq.emplace(gnow, nidx);
        }
      }
      // Exploration re-derives coverage in pick order.
      for (auto x : tmp_cover) covered[x] = 0;
      bool self_done = false;
      auto explore = [&](auto&& self, std::uint32_t V) -> void {
        visited[V] = 1;
        touched_v.push_back(V);
        const auto& o = g.out(vnode(V));
        Graph::Bitmap bits(o.size(), true);
        bool has_real = false, any_zero = false;
        std::vector<std::pair<std::uint32_t, std::size_t>> kids;
        for (std::size_t k = 0; k < o.size(); ++k) {
          if (is_virtual(o[k])) {
            kids.emplace_back(vindex(o[k]), k);
            continue;
          }
          has_real = true;
          Node x = o[k];
          bool take = x == u ? !self_done : !covered[x];
          if (take) {
            if (x == u) self_done = true;
            else cover(x);
          } else {
            bits[k] = false;
            any_zero = true;
          }
        }
        std::vector<char> done(kids.size(), 0);
        for (;;) {
          std::size_t best = kids.size();
          std::uint32_t best_gain = 0;
          for (std::size_t j = 0; j < kids.size(); ++j) {
            if (done[j] || visited[kids[j].first]) continue;
            auto gj = gain(kids[j].first);
            if (gj > best_gain || (gj == best_gain && gj > 0 && kids[j].first < kids[best].first)) {
              best = j;
              best_gain = gj;
            }
          }
          if (best == kids.size()) break;
          done[best] = 1;
          self(self, kids[best].first);
        }
        for (std::size_t j = 0; j < kids.size(); ++j)
          if (!done[j]) {
            bits[kids[j].second] = false;
            any_zero = true;
          }
        if (has_real || any_zero) res.bitmaps.emplace_back(V, u, std::move(bits));
      };
      for (auto V : picked) explore(explore, V);
      for (auto V : first)
        if (std::find(picked.begin(), picked.end(), V) == picked.end()) res.dropped.emplace_back(u, V);
      res.counts.emplace_back(u, static_cast<std::uint32_t>(picked.size()), static_cast<std::uint32_t>(first.size()));
      for (auto x : touched_r) covered[x] = 0;
      for (auto V : touched_v) visited[V] = 0;
      touched_r.clear();
      touched_v.clear();
    }
  });
  if (stats) {
    stats->kept.assign(g.real_capacity(), 0);
    stats->candidates.assign(g.real_capacity(), 0);
  }
  for (auto& r : results) {
    for (auto [u, V] : r.dropped) g.remove_physical_edge(Node{u}, vnode(V));
    if (stats)
      for (auto [u, k, c] : r.counts) {
        stats->kept[u] = k;
        stats->candidates[u] = c;
      }
  }
  for (auto& r : results)
    for (auto& [V, u, bits] : r.bitmaps) g.set_bitmap(V, u, std::move(bits));
  g.set_repr(Repr::Bitmap);
  return g;
}

// ---- DEDUP-1 ----

namespace detail {

// Shared edge surgery for the single-layer DEDUP-1 algorithms.
class Dedup1Work {
 public:
  explicit Dedup1Work(Graph& g) : g(g) {}
  Graph& g;

  const std::vector<Node>& I(std::uint32_t V) const { return g.in(vnode(V)); }
  const std::vector<Node>& O(std::uint32_t V) const { return g.out(vnode(V)); }

  // Does s reach x other than through the hop Z->x?
  bool reaches(std::uint32_t s, std::uint32_t x, std::optional<std::uint32_t> skip = std::nullopt) const {
    const auto& so = g.out(s);
    const auto& xi = g.in(x);
    if (sorted_contains(so, Node{x})) return true;
    if (so.size() <= xi.size()) {
      for (auto it = std::lower_bound(so.begin(), so.end(), kVirtualBit); it != so.end(); ++it)
        if ((!skip || vindex(*it) != *skip) && sorted_contains(g.out(*it), Node{x})) return true;
    } else {
      for (auto it = std::lower_bound(xi.begin(), xi.end(), kVirtualBit); it != xi.end(); ++it)
        if ((!skip || vindex(*it) != *skip) && sorted_contains(g.in(*it), Node{s})) return true;
    }
    return false;
  }

  // Direct edges needed if Z->x were cut.
  std::size_t cut_cost(std::uint32_t Z, std::uint32_t x) const {
    std::size_t n = 0;
    for (Node s : I(Z))
      if (!is_virtual(s) && s != x && !reaches(s, x, Z)) ++n;
    return n;
  }

  // Cuts Z->x and re-adds direct s->x for sources that lost x. Returns edges added.
  std::size_t cut(std::uint32_t Z, std::uint32_t x) {
    std::vector<Node> srcs = I(Z);
    g.remove_physical_edge(vnode(Z), Node{x});
    std::size_t n = 0;
    for (Node s : srcs)
      if (!is_virtual(s) && s != x && !reaches(s, x)) n += g.insert_physical_edge(s, Node{x}) ? 1 : 0;
    return n;
  }

  // Removes direct s->x for s in I(V), x in O(V).
  void drop_covered_direct(std::uint32_t V) {
    std::vector<Node> ov = O(V);
    for (Node s : std::vector<Node>(I(V))) {
      const auto& so = g.out(s);
      std::vector<Node> hit;
      std::set_intersection(so.data(), real_end(so), ov.begin(), ov.end(), std::back_inserter(hit));
      for (Node x : hit)
        if (x != s) g.remove_physical_edge(s, x);
    }
  }

  // Drops u's direct edges that one of u's virtual nodes also covers.
  void drop_covered_direct_from(std::uint32_t u) {
    const auto& uo = g.out(u);
    std::vector<Node> direct(uo.data(), real_end(uo));
    for (Node x : direct) {
      if (x == u) continue;
      for (auto V : virtual_part(g.out(u)))
        if (sorted_contains(O(V), x)) {
          g.remove_physical_edge(u, x);
          break;
        }
    }
  }

  // Targets x in O(V) & O(W) with some s in I(V) & I(W), s != x.
  std::vector<Node> dup_targets(std::uint32_t V, std::uint32_t W) const {
    auto ii = intersect(I(V), I(W));
    if (ii.empty()) return {};
    auto oo = intersect(O(V), O(W));
    if (ii.size() == 1) std::erase(oo, ii[0]);
    return oo;
  }

  // Processed virtual nodes sharing an in-node with V, ascending.
  std::vector<std::uint32_t> partners(std::uint32_t V, const std::vector<char>& processed) const {
    std::vector<std::uint32_t> out;
    for (Node s : I(V))
      for (auto W : virtual_part(g.out(s)))
        if (W != V && processed[W]) out.push_back(W);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void finish() {
    for (std::uint32_t v = 0; v < g.virtual_capacity(); ++v)
      if (g.virtual_alive(v) && (I(v).empty() || O(v).empty())) g.remove_virtual(v);
    g.compact_virtuals();
    g.set_repr(Repr::Dedup1);
  }
};

inline Graph dedup1_input(const Graph& in, const char* algo) {
  require_input(in, algo);
  if (in.is_multi_layer())
    throw UnsupportedLayering(std::string(algo) + " supports single-layer condensed graphs only");
  Graph g = in;
  g.clear_bitmaps();
  return g;
}

}  // namespace detail

inline Graph naive_virtual_first(const Graph& in, const Ordering& ord) {
  Graph g = detail::dedup1_input(in, "naive-vfirst");
  detail::Dedup1Work w(g);
  std::mt19937_64 rng(ord.seed);
  std::vector<char> processed(g.virtual_capacity(), 0);
  std::vector<std::uint32_t> processed_list;
  for (auto V : order_virtuals(g, ord)) {
    auto partners = w.partners(V, processed);
    // Walk partners in processing order.
    std::vector<std::uint32_t> seq;
    for (auto R : processed_list)
      if (std::binary_search(partners.begin(), partners.end(), R)) seq.push_back(R);
    for (auto R : seq) {
      for (;;) {
        auto cand = w.dup_targets(V, R);
        if (cand.empty()) break;
        Node r = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
        std::uint32_t Z = w.I(R).size() < w.I(V).size() ? R : V;
        w.cut(Z, r);
      }
    }
    w.drop_covered_direct(V);
    processed[V] = 1;
    processed_list.push_back(V);
  }
  w.finish();
  return g;
}

inline Graph naive_real_first(const Graph& in, const Ordering& ord) {
  Graph g = detail::dedup1_input(in, "naive-rfirst");
  detail::Dedup1Work w(g);
  std::mt19937_64 rng(ord.seed);
  auto vorder = order_virtuals(g, ord);
  std::vector<std::uint32_t> rank(g.virtual_capacity(), 0);
  for (std::uint32_t i = 0; i < vorder.size(); ++i) rank[vorder[i]] = i;
  for (auto u : order_reals(g, ord)) {
    auto vs = detail::virtual_part(g.out(u));
    std::sort(vs.begin(), vs.end(), [&](auto a, auto b) { return rank[a] < rank[b]; });
    std::vector<std::uint32_t> processed;
    for (auto V : vs) {
      for (auto R : processed) {
        for (;;) {
          auto cand = detail::intersect(w.O(V), w.O(R));
          std::erase(cand, Node{u});
          if (cand.empty()) break;
          Node r = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
          std::uint32_t Z = w.I(R).size() < w.I(V).size() ? R : V;
          w.cut(Z, r);
        }
      }
      processed.push_back(V);
    }
    w.drop_covered_direct_from(u);
  }
  w.finish();
  return g;
}

inline Graph greedy_real_first(const Graph& in, const Ordering& ord) {
  Graph g = detail::dedup1_input(in, "greedy-rfirst");
  detail::Dedup1Work w(g);
  auto vorder = order_virtuals(g, ord);
  std::vector<std::uint32_t> rank(g.virtual_capacity(), 0);
  for (std::uint32_t i = 0; i < vorder.size(); ++i) rank[vorder[i]] = i;
  for (auto u : order_reals(g, ord)) {
    std::vector<std::uint32_t> N = g.neighbor_list(u);
    std::sort(N.begin(), N.end());
    auto vs = detail::virtual_part(g.out(u));
    std::sort(vs.begin(), vs.end(), [&](auto a, auto b) { return rank[a] < rank[b]; });
    std::vector<char> kept(vs.size(), 0);
    std::set<std::uint32_t> X;
    for (;;) {
      std::size_t best = vs.size();
      long long best_benefit = 0;
      for (std::size_t j = 0; j < vs.size(); ++j) {
        if (kept[j]) continue;
        long long fresh = 0, comp = 0;
        std::vector<Node> C;
        for (Node x : w.O(vs[j])) {
          if (x == u) continue;
          if (X.count(x)) C.push_back(x);
          else ++fresh;
        }
        if (fresh == 0) continue;
        for (Node x : C) comp += static_cast<long long>(w.cut_cost(vs[j], x));
        long long benefit = fresh + static_cast<long long>(C.size()) - 1 - comp;
        if (benefit > best_benefit) {
          best_benefit = benefit;
          best = j;
        }
      }
      if (best == vs.size()) break;
      std::uint32_t V = vs[best];
      kept[best] = 1;
      std::vector<Node> C;
      for (Node x : w.O(V))
        if (x != u && X.count(x)) C.push_back(x);
      for (Node x : C) w.cut(V, x);
      for (Node x : w.O(V))
        if (x != u) X.insert(x);
    }
    for (std::size_t j = 0; j < vs.size(); ++j)
      if (!kept[j]) g.remove_physical_edge(Node{u}, vnode(vs[j]));
    for (auto x : N) {
      if (x == u) continue;
      if (X.count(x)) g.remove_physical_edge(Node{u}, Node{x});
      else g.insert_physical_edge(Node{u}, Node{x});
    }
  }
  w.finish();
  return g;
}

inline Graph greedy_virtual_first(const Graph& in, const Ordering& ord) {
  Graph g = detail::dedup1_input(in, "greedy-vfirst");
  detail::Dedup1Work w(g);
  std::vector<char> processed(g.virtual_capacity(), 0);
  for (auto V : order_virtuals(g, ord)) {
    for (;;) {
      // C_W restricted to targets that actually duplicate.
      std::vector<std::pair<std::uint32_t, std::vector<Node>>> rel;
      for (auto W : w.partners(V, processed)) {
        auto c = w.dup_targets(V, W);
        if (!c.empty()) rel.emplace_back(W, std::move(c));
      }
      if (rel.empty()) break;
      struct Option {
        std::uint32_t cut_from;
        Node x;
        std::size_t benefit, cost;
      };
      std::vector<Option> opts;
      std::map<Node, std::size_t> hits;
      for (const auto& [W, c] : rel)
        for (Node x : c) {
          ++hits[x];
          opts.push_back({W, x, 1, w.cut_cost(W, x)});
        }
      for (const auto& [x, n] : hits) opts.push_back({V, x, n, w.cut_cost(V, x)});
      auto better = [](const Option& a, const Option& b) {
        // benefit/cost, cost 0 as infinite ratio
        if (a.cost == 0 || b.cost == 0) {
          if ((a.cost == 0) != (b.cost == 0)) return a.cost == 0;
        } else {
          auto l = static_cast<unsigned __int128>(a.benefit) * b.cost;
          auto r = static_cast<unsigned __int128>(b.benefit) * a.cost;
          if (l != r) return l > r;
        }
        if (a.benefit != b.benefit) return a.benefit > b.benefit;
        if (a.x != b.x) return a.x < b.x;
        return a.cut_from < b.cut_from;
      };
      const Option* best = &opts[0];
      for (const auto& o : opts)
        if (better(o, *best)) best = &o;
      w.cut(best->cut_from, best->x);
    }
    w.drop_covered_direct(V);
    processed[V] = 1;
  }
  w.finish();
  return g;
}

// ---- DEDUP-2 ----

namespace detail {

class Dedup2Builder {
 public:
  explicit Dedup2Builder(std::size_t n) : of_real_(n) {}

  void insert_top(std::vector<std::uint32_t> X) {
    std::sort(X.begin(), X.end());
    X.erase(std::unique(X.begin(), X.end()), X.end());
    if (X.size() < 2) return;
    constraints_.clear();
    insert(X);
    for (const auto& c : constraints_) apply(expand_ids(c.a, c.epoch), expand_ids(c.b, c.epoch));
    // Anything still missing gets a singleton-node special edge.
    for (std::size_t i = 0; i < X.size(); ++i)
      for (std::size_t j = i + 1; j < X.size(); ++j)
        if (!covered(X[i], X[j])) link(sing(X[i]), sing(X[j]));
  }

  std::size_t node_count() const { return members_.size(); }
  const std::vector<std::uint32_t>& members(std::uint32_t v) const { return members_[v]; }
  const std::set<std::uint32_t>& specials(std::uint32_t v) const { return spec_[v]; }

  bool covered(std::uint32_t a, std::uint32_t b) const {
    for (auto V : of_real_[a]) {
      if (std::binary_search(members_[V].begin(), members_[V].end(), b)) return true;
      for (auto W : spec_[V])
        if (std::binary_search(members_[W].begin(), members_[W].end(), b)) return true;
    }
    return false;
  }

 private:
  using Set = std::vector<std::uint32_t>;

  std::uint32_t create(const Set& s) {
    auto id = static_cast<std::uint32_t>(members_.size());
    members_.push_back(s);
    spec_.emplace_back();
    children_.emplace_back();
    for (auto r : s) of_real_[r].push_back(id);
    return id;
  }

  void link(std::uint32_t a, std::uint32_t b) {
    spec_[a].insert(b);
    spec_[b].insert(a);
  }

  std::uint32_t sing(std::uint32_t r) {
    auto it = sing_.find(r);
    if (it != sing_.end()) return it->second;
    auto id = create({r});
    sing_[r] = id;
    return id;
  }

  // Splits HV into HV := keep and a new node holding the rest; returns the new id.
  std::uint32_t split(std::uint32_t HV, const Set& keep) {
    Set rest;
    std::set_difference(members_[HV].begin(), members_[HV].end(), keep.begin(), keep.end(), std::back_inserter(rest));
    for (auto r : rest) std::erase(of_real_[r], HV);
    members_[HV] = keep;
    auto W2 = create(rest);
    for (auto Z : std::set<std::uint32_t>(spec_[HV])) link(W2, Z);
    link(HV, W2);
    children_[HV].emplace_back(W2, ++epoch_);
    return W2;
  }

  // A constrained node that splits later passes the constraint to its pieces.
  Set expand_ids(const Set& ids, std::uint64_t since) const {
    Set out;
    std::vector<std::uint32_t> stack(ids.begin(), ids.end());
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      out.push_back(v);
      for (auto [c, e] : children_[v])
        if (e > since) stack.push_back(c);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // Returns the node ids whose member sets partition X.
  Set insert(const Set& X) {
    if (X.empty()) return {};
    std::map<std::uint32_t, std::size_t> overlap;
    for (auto r : X)
      for (auto V : of_real_[r]) ++overlap[V];
    if (overlap.empty()) return {create(X)};
    std::uint32_t HV = overlap.begin()->first;
    for (const auto& [V, n] : overlap)
      if (n > overlap[HV]) HV = V;
    Set W1;
    std::set_intersection(members_[HV].begin(), members_[HV].end(), X.begin(), X.end(), std::back_inserter(W1));
    std::set<std::uint32_t> hv_spec = spec_[HV];
    if (W1.size() < members_[HV].size()) split(HV, W1);
    Set rest, near, W3, W4;
    std::set_difference(X.begin(), X.end(), W1.begin(), W1.end(), std::back_inserter(rest));
    for (auto Z : hv_spec) near.insert(near.end(), members_[Z].begin(), members_[Z].end());
    std::sort(near.begin(), near.end());
    std::set_intersection(rest.begin(), rest.end(), near.begin(), near.end(), std::back_inserter(W4));
    std::set_difference(rest.begin(), rest.end(), W4.begin(), W4.end(), std::back_inserter(W3));
    Set p4 = insert(W4);
    Set p3 = insert(W3);
    if (!p3.empty()) constraints_.push_back({p3, Set{HV}, epoch_});
    if (!p3.empty() && !p4.empty()) constraints_.push_back({p4, p3, epoch_});
    Set pieces = {HV};
    pieces.insert(pieces.end(), p4.begin(), p4.end());
    pieces.insert(pieces.end(), p3.begin(), p3.end());
    return pieces;
  }

  // Joins every piece of A to every piece of B when that adds only new pairs.
  void apply(const Set& A, const Set& B) {
    for (auto p : A)
      for (auto q : B) {
        if (p == q || spec_[p].count(q)) continue;
        bool clean = true;
        for (auto a : members_[p]) {
          for (auto b : members_[q])
            if (a == b || covered(a, b)) {
              clean = false;
              break;
            }
          if (!clean) break;
        }
        if (clean) {
          link(p, q);
        } else {
          for (auto a : members_[p])
            for (auto b : members_[q])
              if (a != b && !covered(a, b)) link(sing(a), sing(b));
        }
      }
  }

  std::vector<Set> members_;
  std::vector<std::set<std::uint32_t>> spec_;
  struct Constraint {
    Set a, b;
    std::uint64_t epoch;
  };
  std::vector<std::vector<std::pair<std::uint32_t, std::uint64_t>>> children_;
  std::uint64_t epoch_ = 0;
  std::vector<std::vector<std::uint32_t>> of_real_;
  std::map<std::uint32_t, std::uint32_t> sing_;
  std::vector<Constraint> constraints_;
};

}  // namespace detail

inline Graph dedup2(const Graph& in, const Ordering& ord) {
  detail::require_input(in, "dedup2");
  if (in.is_multi_layer() || !in.is_symmetric())
    throw UnsupportedShape("dedup2 needs a single-layer, symmetric condensed graph");
  detail::Dedup2Builder b(in.real_capacity());
  for (auto V : order_virtuals(in, ord)) {
    std::vector<std::uint32_t> X;
    for (Node x : in.out(vnode(V)))
      if (in.alive(x)) X.push_back(x);
    b.insert_top(X);
  }
  for (auto u : in.vertices()) {
    const auto& o = in.out(u);
    for (const Node* p = o.data(); p != detail::real_end(o); ++p)
      if (*p > u && in.alive(*p)) b.insert_top({u, *p});
  }
  Graph g;
  for (std::uint32_t r = 0; r < in.real_capacity(); ++r) g.add_vertex(in.id(r), in.props(r));
  g.set_repr(Repr::Dedup2);
  g.options() = in.options();
  std::vector<std::uint32_t> id(b.node_count(), 0);
  for (std::uint32_t v = 0; v < b.node_count(); ++v) {
    if (b.members(v).empty()) continue;
    id[v] = g.add_virtual(1);
    for (auto r : b.members(v)) {
      g.add_edge_raw(Node{r}, vnode(id[v]));
      g.add_edge_raw(vnode(id[v]), Node{r});
    }
  }
  for (std::uint32_t v = 0; v < b.node_count(); ++v)
    for (auto w : b.specials(v))
      if (w > v && !b.members(v).empty() && !b.members(w).empty()) g.add_special_raw(id[v], id[w]);
  g.normalize();
  for (std::uint32_t r = 0; r < in.real_capacity(); ++r)
    if (!in.alive(r)) g.delete_vertex(r);
  return g;
}

// ---- dispatch ----

enum class Algo { Bitmap1, Bitmap2, NaiveVFirst, NaiveRFirst, GreedyRFirst, GreedyVFirst, Dedup2 };

inline const char* algo_name(Algo a) {
  switch (a) {
    case Algo::Bitmap1: return "bitmap1";
    case Algo::Bitmap2: return "bitmap2";
    case Algo::NaiveVFirst: return "naive-vfirst";
    case Algo::NaiveRFirst: return "naive-rfirst";
    case Algo::GreedyRFirst: return "greedy-rfirst";
    case Algo::GreedyVFirst: return "greedy-vfirst";
    case Algo::Dedup2: return "dedup2";
  }
  return "?";
}

inline Algo parse_algo(const std::string& s) {
  for (Algo a : {Algo::Bitmap1, Algo::Bitmap2, Algo::NaiveVFirst, Algo::NaiveRFirst, Algo::GreedyRFirst,
                 Algo::GreedyVFirst, Algo::Dedup2})
    if (s == algo_name(a)) return a;
  throw ConfigError("unknown algorithm '" + s + "'");
}

inline Graph run_dedup(Algo a, const Graph& g, const Ordering& ord, unsigned workers = 1) {
  switch (a) {
    case Algo::Bitmap1: return bitmap1(g, ord, workers);
    case Algo::Bitmap2: return bitmap2(g, ord, workers);
    case Algo::NaiveVFirst: return naive_virtual_first(g, ord);
    case Algo::NaiveRFirst: return naive_real_first(g, ord);
    case Algo::GreedyRFirst: return greedy_real_first(g, ord);
    case Algo::GreedyVFirst: return greedy_virtual_first(g, ord);
    case Algo::Dedup2: return dedup2(g, ord);
  }
  throw ContractViolation("unreachable");
}

}  // namespace graphgen
