#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "graphgen/error.hpp"

namespace graphgen {

// Adjacency entries. Real nodes use their index; virtual nodes set the high bit,
// so a sorted list always has direct real targets before virtual ones.
using Node = std::uint32_t;
inline constexpr Node kVirtualBit = 0x80000000u;
inline constexpr bool is_virtual(Node n) { return (n & kVirtualBit) != 0; }
inline constexpr Node vnode(std::uint32_t v) { return v | kVirtualBit; }
inline constexpr std::uint32_t vindex(Node n) { return n & ~kVirtualBit; }

using Props = std::map<std::string, std::string>;

enum class Repr { CDup, Exp, Dedup1, Bitmap, Dedup2 };

inline const char* repr_name(Repr r) {
  switch (r) {
    case Repr::CDup: return "cdup";
    case Repr::Exp: return "exp";
    case Repr::Dedup1: return "dedup1";
    case Repr::Bitmap: return "bitmap";
    case Repr::Dedup2: return "dedup2";
  }
  return "?";
}

inline std::optional<Repr> parse_repr(const std::string& s) {
  for (Repr r : {Repr::CDup, Repr::Exp, Repr::Dedup1, Repr::Bitmap, Repr::Dedup2})
    if (s == repr_name(r)) return r;
  return std::nullopt;
}

// Logical: representation-aware, each neighbor once. Raw: plain DFS without a
// seen-set, so C-DUP yields one entry per path (fine for duplicate-insensitive work).
enum class Traversal { Logical, Raw };

namespace detail {

template <class T>
bool sorted_insert(std::vector<T>& v, T x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it != v.end() && *it == x) return false;
  v.insert(it, x);
  return true;
}

// Returns the erased position, or npos.
template <class T>
std::size_t sorted_erase(std::vector<T>& v, T x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.end() || *it != x) return static_cast<std::size_t>(-1);
  std::size_t pos = static_cast<std::size_t>(it - v.begin());
  v.erase(it);
  return pos;
}

template <class T>
bool sorted_contains(const std::vector<T>& v, T x) {
  return std::binary_search(v.begin(), v.end(), x);
}

struct BitSet {
  std::vector<std::uint64_t> w;
  bool test_set(std::size_t i) {
    if (i / 64 >= w.size()) w.resize(i / 64 + 1, 0);
    std::uint64_t m = std::uint64_t{1} << (i % 64);
    bool was = w[i / 64] & m;
    w[i / 64] |= m;
    return was;
  }
};

}  // namespace detail

class NeighborCursor;

class Graph {
 public:
  using Bitmap = std::vector<bool>;
  static constexpr std::size_t kNoBudget = std::numeric_limits<std::size_t>::max();

  struct Options {
    bool include_self = false;
    double compact_fraction = 0.125;
  };

  Graph() = default;

  // ---- real nodes ----

  std::uint32_t add_vertex(const std::string& id, Props props = {}) {
    if (index_.count(id)) throw NameClash("duplicate vertex id '" + id + "'");
    auto i = static_cast<std::uint32_t>(ids_.size());
    ids_.push_back(id);
    props_.push_back(std::move(props));
    rout_.emplace_back();
    rin_.emplace_back();
    rdead_.push_back(false);
    index_.emplace(id, i);
    ++live_reals_;
    ++version_;
    return i;
  }

  std::optional<std::uint32_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::uint32_t index_of(const std::string& id) const {
    auto f = find(id);
    if (!f) throw StaleHandle("unknown vertex '" + id + "'");
    return *f;
  }

  std::size_t real_capacity() const { return ids_.size(); }
  std::size_t num_reals() const { return live_reals_; }
  bool alive(std::uint32_t r) const { return r < ids_.size() && !rdead_[r]; }
  const std::string& id(std::uint32_t r) const { return ids_.at(r); }
  const Props& props(std::uint32_t r) const { return props_.at(r); }
  void set_prop(std::uint32_t r, const std::string& k, const std::string& v) {
    check_live(r);
    props_[r][k] = v;
  }

  std::vector<std::uint32_t> vertices() const {
    std::vector<std::uint32_t> out;
    out.reserve(live_reals_);
    for (std::uint32_t i = 0; i < ids_.size(); ++i)
      if (!rdead_[i]) out.push_back(i);
    return out;
  }

  // ---- virtual nodes ----

  std::uint32_t add_virtual(int layer = 1, std::string label = {}) {
    auto v = static_cast<std::uint32_t>(vlayer_.size());
    vlayer_.push_back(layer);
    vlabel_.push_back(std::move(label));
    vout_.emplace_back();
    vin_.emplace_back();
    vspec_.emplace_back();
    bitmaps_.emplace_back();
    vdead_.push_back(false);
    ++version_;
    return v;
  }

  std::size_t virtual_capacity() const { return vlayer_.size(); }
  std::size_t num_virtuals() const {
    return static_cast<std::size_t>(std::count(vdead_.begin(), vdead_.end(), false));
  }
  bool virtual_alive(std::uint32_t v) const { return v < vdead_.size() && !vdead_[v]; }
  int layer(std::uint32_t v) const { return vlayer_.at(v); }
  const std::string& label(std::uint32_t v) const { return vlabel_.at(v); }

  // ---- physical structure ----

  const std::vector<Node>& out(Node n) const { return is_virtual(n) ? vout_.at(vindex(n)) : rout_.at(n); }
  const std::vector<Node>& in(Node n) const { return is_virtual(n) ? vin_.at(vindex(n)) : rin_.at(n); }
  const std::vector<Node>& specials(std::uint32_t v) const { return vspec_.at(v); }

  // Appends without keeping lists sorted; call normalize() once the bulk load is done.
  void add_edge_raw(Node a, Node b) {
    out_mut(a).push_back(b);
    if (keeps_in_list(a, b)) in_mut(b).push_back(a);
    ++version_;
  }
  void add_special_raw(std::uint32_t v, std::uint32_t w) {
    vspec_[v].push_back(vnode(w));
    vspec_[w].push_back(vnode(v));
    ++version_;
  }

  // Sorts and dedups every out-list, rebuilds in-lists. Drops all bitmaps.
  void normalize() {
    for (auto& l : rout_) sort_unique(l);
    for (auto& l : vout_) sort_unique(l);
    for (auto& l : vspec_) sort_unique(l);
    rebuild_in_lists();
    for (auto& b : bitmaps_) b.clear();
    ++version_;
  }

  bool has_physical_edge(Node a, Node b) const { return detail::sorted_contains(out(a), b); }

  bool insert_physical_edge(Node a, Node b) {
    auto& o = out_mut(a);
    auto it = std::lower_bound(o.begin(), o.end(), b);
    if (it != o.end() && *it == b) return false;
    std::size_t pos = static_cast<std::size_t>(it - o.begin());
    o.insert(it, b);
    if (is_virtual(a))
      for (auto& [src, bits] : bitmaps_[vindex(a)]) bits.insert(bits.begin() + static_cast<std::ptrdiff_t>(pos), true);
    if (keeps_in_list(a, b)) detail::sorted_insert(in_mut(b), a);
    ++version_;
    return true;
  }

  bool remove_physical_edge(Node a, Node b) {
    std::size_t pos = detail::sorted_erase(out_mut(a), b);
    if (pos == static_cast<std::size_t>(-1)) return false;
    if (is_virtual(a))
      for (auto& [src, bits] : bitmaps_[vindex(a)])
        if (pos < bits.size()) bits.erase(bits.begin() + static_cast<std::ptrdiff_t>(pos));
    if (keeps_in_list(a, b)) detail::sorted_erase(in_mut(b), a);
    if (!is_virtual(a) && !is_virtual(b)) edge_props_.erase({a, b});
    ++version_;
    return true;
  }

  bool insert_special(std::uint32_t v, std::uint32_t w) {
    if (!detail::sorted_insert(vspec_[v], vnode(w))) return false;
    detail::sorted_insert(vspec_[w], vnode(v));
    ++version_;
    return true;
  }
  bool remove_special(std::uint32_t v, std::uint32_t w) {
    if (detail::sorted_erase(vspec_[v], vnode(w)) == static_cast<std::size_t>(-1)) return false;
    detail::sorted_erase(vspec_[w], vnode(v));
    ++version_;
    return true;
  }

  // Detaches a virtual node from everything and marks it dead.
  void remove_virtual(std::uint32_t v) {
    Node n = vnode(v);
    for (Node p : std::vector<Node>(vin_[v])) remove_physical_edge(p, n);
    for (Node c : std::vector<Node>(vout_[v])) remove_physical_edge(n, c);
    if (repr_ == Repr::Dedup2)
      for (std::uint32_t r = 0; r < rout_.size(); ++r) detail::sorted_erase(rout_[r], n);
    for (Node w : std::vector<Node>(vspec_[v])) remove_special(v, vindex(w));
    bitmaps_[v].clear();
    vdead_[v] = true;
    ++version_;
  }

  // Renumbers live virtual nodes densely, keeping their relative order.
  void compact_virtuals() {
    std::vector<Node> remap(vlayer_.size(), 0);
    std::uint32_t next = 0;
    for (std::uint32_t v = 0; v < vlayer_.size(); ++v)
      if (!vdead_[v]) remap[v] = vnode(next++);
    if (next == vlayer_.size()) return;
    auto fix = [&](std::vector<Node>& l) {
      for (auto& n : l)
        if (is_virtual(n)) n = remap[vindex(n)];
    };
    for (auto& l : rout_) fix(l);
    for (auto& l : rin_) fix(l);
    std::vector<int> layer;
    std::vector<std::string> label;
    std::vector<std::vector<Node>> vo, vi, vs;
    std::vector<std::unordered_map<std::uint32_t, Bitmap>> bm;
    for (std::uint32_t v = 0; v < vlayer_.size(); ++v) {
      if (vdead_[v]) continue;
      layer.push_back(vlayer_[v]);
      label.push_back(std::move(vlabel_[v]));
      fix(vout_[v]);
      fix(vin_[v]);
      fix(vspec_[v]);
      vo.push_back(std::move(vout_[v]));
      vi.push_back(std::move(vin_[v]));
      vs.push_back(std::move(vspec_[v]));
      bm.push_back(std::move(bitmaps_[v]));
    }
    vlayer_ = std::move(layer);
    vlabel_ = std::move(label);
    vout_ = std::move(vo);
    vin_ = std::move(vi);
    vspec_ = std::move(vs);
    bitmaps_ = std::move(bm);
    vdead_.assign(vlayer_.size(), false);
    ++version_;
  }

  // ---- bitmaps ----

  void set_bitmap(std::uint32_t v, std::uint32_t src, Bitmap bits) {
    if (bits.size() != vout_.at(v).size()) throw ContractViolation("bitmap length must equal out-degree");
    bitmaps_[v][src] = std::move(bits);
    ++version_;
  }
  const Bitmap* bitmap(std::uint32_t v, std::uint32_t src) const {
    const auto& m = bitmaps_[v];
    if (m.empty()) return nullptr;
    auto it = m.find(src);
    return it == m.end() ? nullptr : &it->second;
  }
  const std::unordered_map<std::uint32_t, Bitmap>& bitmaps(std::uint32_t v) const { return bitmaps_.at(v); }
  void clear_bitmaps() {
    for (auto& b : bitmaps_) b.clear();
    ++version_;
  }
  std::size_t bitmap_count() const {
    std::size_t n = 0;
    for (const auto& b : bitmaps_) n += b.size();
    return n;
  }

  // ---- metadata ----

  Repr repr() const { return repr_; }
  void set_repr(Repr r) {
    repr_ = r;
    ++version_;
  }
  Options& options() { return opts_; }
  const Options& options() const { return opts_; }
  std::uint64_t version() const { return version_; }

  void set_edge_props(std::uint32_t a, std::uint32_t b, Props p) { edge_props_[{a, b}] = std::move(p); }
  const Props* edge_props(std::uint32_t a, std::uint32_t b) const {
    auto it = edge_props_.find({a, b});
    return it == edge_props_.end() ? nullptr : &it->second;
  }
  const std::map<std::pair<std::uint32_t, std::uint32_t>, Props>& all_edge_props() const { return edge_props_; }

  // ---- counts ----

  std::size_t direct_edge_count() const {
    std::size_t n = 0;
    for (std::uint32_t r = 0; r < rout_.size(); ++r) {
      if (rdead_[r]) continue;
      for (Node t : rout_[r])
        if (!is_virtual(t) && !rdead_[t]) ++n;
    }
    return n;
  }

  // Stored edges: direct + real/virtual + virtual/virtual; DEDUP-2 incidences and
  // special edges count once each.
  std::size_t physical_edge_count() const {
    std::size_t n = 0;
    for (std::uint32_t r = 0; r < rout_.size(); ++r) {
      if (rdead_[r]) continue;
      for (Node t : rout_[r])
        if (is_virtual(t) || !rdead_[t]) ++n;
    }
    if (repr_ == Repr::Dedup2) return n + special_edge_count();
    for (std::uint32_t v = 0; v < vout_.size(); ++v) {
      if (vdead_[v]) continue;
      for (Node t : vout_[v])
        if (is_virtual(t) || !rdead_[t]) ++n;
    }
    return n;
  }

  std::size_t special_edge_count() const {
    std::size_t n = 0;
    for (const auto& s : vspec_) n += s.size();
    return n / 2;
  }

  bool is_multi_layer() const {
    for (std::uint32_t v = 0; v < vout_.size(); ++v)
      if (!vdead_[v])
        for (Node t : vout_[v])
          if (is_virtual(t)) return true;
    return false;
  }

  // Single-layer with I(V) == O(V) for every virtual node and symmetric direct edges.
  bool is_symmetric() const {
    if (repr_ == Repr::Dedup2) return true;
    if (is_multi_layer()) return false;
    for (std::uint32_t v = 0; v < vout_.size(); ++v)
      if (!vdead_[v] && vin_[v] != vout_[v]) return false;
    for (std::uint32_t r = 0; r < rout_.size(); ++r)
      for (Node t : rout_[r])
        if (!is_virtual(t) && !detail::sorted_contains(rout_[t], Node{r})) return false;
    return true;
  }

  // Virtual nodes in topological order; throws on a cycle.
  std::vector<std::uint32_t> virtual_topo_order() const {
    std::vector<std::uint32_t> indeg(vout_.size(), 0), order;
    for (std::uint32_t v = 0; v < vout_.size(); ++v)
      for (Node p : vin_[v])
        if (is_virtual(p)) ++indeg[v];
    for (std::uint32_t v = 0; v < vout_.size(); ++v)
      if (indeg[v] == 0) order.push_back(v);
    for (std::size_t i = 0; i < order.size(); ++i)
      for (Node c : vout_[order[i]])
        if (is_virtual(c) && --indeg[vindex(c)] == 0) order.push_back(vindex(c));
    if (order.size() != vout_.size()) throw ContractViolation("virtual structure has a cycle");
    return order;
  }
  bool is_dag() const {
    try {
      virtual_topo_order();
      return true;
    } catch (const ContractViolation&) {
      return false;
    }
  }

  // ---- logical API ----

  NeighborCursor neighbors(std::uint32_t v, Traversal t = Traversal::Logical) const;

  template <class F>
  void for_each_neighbor(std::uint32_t v, F&& f, Traversal t = Traversal::Logical) const;

  std::vector<std::uint32_t> neighbor_list(std::uint32_t v, Traversal t = Traversal::Logical) const {
    std::vector<std::uint32_t> out;
    for_each_neighbor(v, [&](std::uint32_t u) { out.push_back(u); }, t);
    return out;
  }

  // Sources s with v in neighbors(s).
  template <class F>
  void for_each_in_neighbor(std::uint32_t v, F&& f) const {
    check_live(v);
    const std::uint64_t ver = version_;
    auto emit_ok = [&](std::uint32_t s) { return !rdead_[s] && (s != v || opts_.include_self); };
    if (repr_ == Repr::Dedup2) {
      std::vector<std::uint32_t> tmp;
      for (Node s : rin_[v])
        if (!is_virtual(s) && emit_ok(s)) tmp.push_back(s);
      for (Node n : rout_[v]) {
        if (!is_virtual(n)) continue;
        std::uint32_t V = vindex(n);
        for (Node s : vout_[V])
          if (emit_ok(s)) tmp.push_back(s);
        for (Node w : vspec_[V])
          for (Node s : vout_[vindex(w)])
            if (emit_ok(s)) tmp.push_back(s);
      }
      for (auto s : tmp) {
        f(s);
        if (version_ != ver) throw ContractViolation("graph mutated during iteration");
      }
      return;
    }
    const bool use_seen = repr_ == Repr::CDup;
    detail::BitSet rseen, vseen;
    std::vector<std::pair<std::uint32_t, Node>> path;  // (virtual, child) hops, innermost last
    auto path_ok = [&](std::uint32_t s) {
      if (repr_ != Repr::Bitmap) return true;
      for (const auto& [V, child] : path) {
        const Bitmap* bm = bitmap(V, s);
        if (!bm) continue;
        const auto& o = vout_[V];
        std::size_t pos = static_cast<std::size_t>(std::lower_bound(o.begin(), o.end(), child) - o.begin());
        if (!(*bm)[pos]) return false;
      }
      return true;
    };
    auto yield = [&](std::uint32_t s) {
      if (!emit_ok(s)) return;
      if (use_seen && rseen.test_set(s)) return;
      if (!path_ok(s)) return;
      f(s);
      if (version_ != ver) throw ContractViolation("graph mutated during iteration");
    };
    auto walk = [&](auto&& self, std::uint32_t V, Node child) -> void {
      if (use_seen && vseen.test_set(V)) return;
      path.emplace_back(V, child);
      for (Node p : vin_[V]) {
        if (is_virtual(p)) self(self, vindex(p), vnode(V));
        else yield(p);
      }
      path.pop_back();
    };
    for (Node p : rin_[v]) {
      if (is_virtual(p)) walk(walk, vindex(p), Node{v});
      else yield(p);
    }
  }

  std::vector<std::uint32_t> in_neighbor_list(std::uint32_t v) const {
    std::vector<std::uint32_t> out;
    for_each_in_neighbor(v, [&](std::uint32_t s) { out.push_back(s); });
    return out;
  }

  bool exists_edge(std::uint32_t v, std::uint32_t u) const {
    check_live(v);
    check_live(u);
    if (v == u && !opts_.include_self) return false;
    const auto& ro = rout_[v];
    if (detail::sorted_contains(ro, Node{u})) return true;
    if (repr_ == Repr::Exp) return false;
    if (repr_ == Repr::Dedup2) {
      for (Node n : ro) {
        if (!is_virtual(n)) continue;
        std::uint32_t V = vindex(n);
        if (detail::sorted_contains(vout_[V], Node{u})) return true;
        for (Node w : vspec_[V])
          if (detail::sorted_contains(vout_[vindex(w)], Node{u})) return true;
      }
      return false;
    }
    return !carriers(v, u, true).empty();
  }

  // ---- mutation ----

  void delete_vertex(std::uint32_t v) {
    check_live(v);
    if (repr_ == Repr::Dedup2) {
      // One incidence per incident virtual node; drop it eagerly.
      for (Node n : rout_[v])
        if (is_virtual(n)) detail::sorted_erase(vout_[vindex(n)], Node{v});
    }
    rdead_[v] = true;
    index_.erase(ids_[v]);
    --live_reals_;
    ++dead_pending_;
    ++version_;
    if (static_cast<double>(dead_pending_) > opts_.compact_fraction * static_cast<double>(ids_.size())) compact();
  }

  // Adds a direct edge unless the logical edge already exists.
  bool add_edge(std::uint32_t v, std::uint32_t u) {
    check_live(v);
    check_live(u);
    if (v != u && exists_edge(v, u)) return false;
    if (v == u && detail::sorted_contains(rout_[v], Node{u})) return false;
    insert_physical_edge(Node{v}, Node{u});
    return true;
  }

  // Removes the logical edge v->u. Virtual paths are cut at their last hop into u and
  // other sources that lose u get a direct edge back.
  bool delete_edge(std::uint32_t v, std::uint32_t u) {
    check_live(v);
    check_live(u);
    bool direct = has_physical_edge(Node{v}, Node{u});
    if (repr_ == Repr::Exp) {
      if (direct) remove_physical_edge(Node{v}, Node{u});
      return direct;
    }
    if (repr_ == Repr::Dedup2) return delete_edge_dedup2(v, u, direct);
    auto carry = v == u ? std::vector<std::uint32_t>{} : carriers(v, u, false);
    if (!direct && carry.empty()) return false;
    if (direct) remove_physical_edge(Node{v}, Node{u});
    if (carry.empty()) return true;
    std::vector<std::uint32_t> sources;
    {
      detail::BitSet seen_r, seen_v;
      std::vector<std::uint32_t> stack(carry.begin(), carry.end());
      for (auto c : carry) seen_v.test_set(c);
      while (!stack.empty()) {
        std::uint32_t V = stack.back();
        stack.pop_back();
        for (Node p : vin_[V]) {
          if (is_virtual(p)) {
            if (!seen_v.test_set(vindex(p))) stack.push_back(vindex(p));
          } else if (p != v && p != u && !rdead_[p] && !seen_r.test_set(p)) {
            sources.push_back(p);
          }
        }
      }
    }
    std::vector<std::uint32_t> had;
    for (auto s : sources)
      if (exists_edge(s, u)) had.push_back(s);
    for (auto c : carry) remove_physical_edge(vnode(c), Node{u});
    for (auto s : had)
      if (!exists_edge(s, u)) insert_physical_edge(Node{s}, Node{u});
    return true;
  }

  // Strips tombstoned reals from every adjacency list. Indices stay stable.
  void compact() {
    auto dead = [&](Node n) { return !is_virtual(n) && rdead_[n]; };
    for (std::uint32_t r = 0; r < rout_.size(); ++r) {
      if (rdead_[r]) {
        rout_[r].clear();
        rin_[r].clear();
        continue;
      }
      std::erase_if(rout_[r], dead);
      std::erase_if(rin_[r], dead);
    }
    for (std::uint32_t v = 0; v < vout_.size(); ++v) {
      auto& o = vout_[v];
      auto& bm = bitmaps_[v];
      for (auto it = bm.begin(); it != bm.end();) {
        if (rdead_[it->first]) it = bm.erase(it);
        else ++it;
      }
      if (!bm.empty()) {
        for (auto& [src, bits] : bm) {
          std::size_t w = 0;
          for (std::size_t i = 0; i < o.size(); ++i)
            if (!dead(o[i])) bits[w++] = bits[i];
          bits.resize(w);
        }
      }
      std::erase_if(o, dead);
      std::erase_if(vin_[v], dead);
    }
    for (auto it = edge_props_.begin(); it != edge_props_.end();) {
      if (rdead_[it->first.first] || rdead_[it->first.second]) it = edge_props_.erase(it);
      else ++it;
    }
    dead_pending_ = 0;
    ++version_;
  }

  // Direct edge (u,v) for every logical edge, self-loops included; virtual structure dropped.
  Graph expand(std::size_t budget = kNoBudget) const;

  // Distinct ordered pairs of distinct live reals joined by a logical edge.
  // Stops early (returning some value > limit) once the count passes limit.
  std::size_t count_expanded_edges(std::size_t limit = kNoBudget) const {
    std::size_t n = 0;
    for (std::uint32_t r = 0; r < ids_.size() && n <= limit; ++r) {
      if (rdead_[r]) continue;
      for_each_neighbor(r, [&](std::uint32_t t) { n += t != r; });
    }
    return n;
  }

  void check_live(std::uint32_t r) const {
    if (r >= ids_.size() || rdead_[r]) throw StaleHandle("stale or unknown vertex handle " + std::to_string(r));
  }

 private:
  friend class NeighborCursor;

  std::vector<Node>& out_mut(Node n) { return is_virtual(n) ? vout_.at(vindex(n)) : rout_.at(n); }
  std::vector<Node>& in_mut(Node n) { return is_virtual(n) ? vin_.at(vindex(n)) : rin_.at(n); }

  // DEDUP-2 incidences are stored once (rout_ of the real, vout_ of the virtual).
  bool keeps_in_list(Node a, Node b) const {
    return !(repr_ == Repr::Dedup2 && (is_virtual(a) != is_virtual(b)));
  }

  static void sort_unique(std::vector<Node>& l) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }

  void rebuild_in_lists() {
    for (auto& l : rin_) l.clear();
    for (auto& l : vin_) l.clear();
    for (std::uint32_t r = 0; r < rout_.size(); ++r)
      for (Node t : rout_[r])
        if (keeps_in_list(r, t)) in_mut(t).push_back(r);
    for (std::uint32_t v = 0; v < vout_.size(); ++v)
      for (Node t : vout_[v])
        if (keeps_in_list(vnode(v), t)) in_mut(t).push_back(vnode(v));
  }

  // Virtual nodes P on v's logical paths with a live hop P->u. With first_only the
  // search stops at the first hit.
  std::vector<std::uint32_t> carriers(std::uint32_t v, std::uint32_t u, bool first_only) const {
    std::vector<std::uint32_t> found;
    std::unordered_set<std::uint32_t> visited;
    std::vector<std::uint32_t> stack;
    for (Node n : rout_[v])
      if (is_virtual(n) && visited.insert(vindex(n)).second) stack.push_back(vindex(n));
    const bool masks = repr_ == Repr::Bitmap;
    while (!stack.empty()) {
      std::uint32_t V = stack.back();
      stack.pop_back();
      const auto& o = vout_[V];
      const Bitmap* bm = masks ? bitmap(V, v) : nullptr;
      auto it = std::lower_bound(o.begin(), o.end(), Node{u});
      if (it != o.end() && *it == u && (!bm || (*bm)[static_cast<std::size_t>(it - o.begin())])) {
        found.push_back(V);
        if (first_only) return found;
      }
      auto vb = std::lower_bound(o.begin(), o.end(), kVirtualBit);
      for (auto c = vb; c != o.end(); ++c) {
        if (bm && !(*bm)[static_cast<std::size_t>(c - o.begin())]) continue;
        if (visited.insert(vindex(*c)).second) stack.push_back(vindex(*c));
      }
    }
    return found;
  }

  std::vector<std::uint32_t> sorted_neighbors(std::uint32_t a) const {
    auto l = neighbor_list(a);
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    return l;
  }

  bool delete_edge_dedup2(std::uint32_t v, std::uint32_t u, bool direct) {
    if (direct) {
      remove_physical_edge(Node{v}, Node{u});
      return true;
    }
    if (v == u) return false;
    // Find the incidence of v carrying u.
    std::optional<std::uint32_t> carrier;
    for (Node n : rout_[v]) {
      if (!is_virtual(n)) continue;
      std::uint32_t V = vindex(n);
      bool hit = detail::sorted_contains(vout_[V], Node{u});
      for (Node w : vspec_[V]) hit = hit || detail::sorted_contains(vout_[vindex(w)], Node{u});
      if (hit) {
        carrier = V;
        break;
      }
    }
    if (!carrier) return false;
    std::uint32_t V = *carrier;
    std::vector<std::uint32_t> affected = {v};
    for (Node m : vout_[V]) affected.push_back(m);
    for (Node w : vspec_[V])
      for (Node m : vout_[vindex(w)]) affected.push_back(m);
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
    std::vector<std::vector<std::uint32_t>> before;
    for (auto a : affected) before.push_back(sorted_neighbors(a));
    detail::sorted_erase(rout_[v], vnode(V));
    detail::sorted_erase(vout_[V], Node{v});
    ++version_;
    for (std::size_t i = 0; i < affected.size(); ++i) {
      auto a = affected[i];
      auto after = sorted_neighbors(a);
      std::vector<std::uint32_t> lost;
      std::set_difference(before[i].begin(), before[i].end(), after.begin(), after.end(), std::back_inserter(lost));
      for (auto x : lost)
        if (!(a == v && x == u)) insert_physical_edge(Node{a}, Node{x});
    }
    return true;
  }

  // reals
  std::vector<std::string> ids_;
  std::vector<Props> props_;
  std::vector<std::vector<Node>> rout_, rin_;
  std::vector<bool> rdead_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t live_reals_ = 0;
  std::size_t dead_pending_ = 0;
  // virtuals
  std::vector<int> vlayer_;
  std::vector<std::string> vlabel_;
  std::vector<std::vector<Node>> vout_, vin_, vspec_;
  std::vector<std::unordered_map<std::uint32_t, Bitmap>> bitmaps_;
  std::vector<bool> vdead_;

  std::map<std::pair<std::uint32_t, std::uint32_t>, Props> edge_props_;
  Repr repr_ = Repr::CDup;
  Options opts_;
  std::uint64_t version_ = 0;
};

using CondensedGraph = Graph;

// Lazy depth-first neighbor enumeration. Mutating the graph while a cursor is live
// makes the next step throw ContractViolation.
class NeighborCursor {
 public:
  NeighborCursor(const Graph& g, std::uint32_t src, Traversal t)
      : NeighborCursor(g, src, t, g.opts_.include_self) {}
  NeighborCursor(const Graph& g, std::uint32_t src, Traversal t, bool include_self)
      : g_(&g), src_(src), ver_(g.version_), repr_(g.repr_),
        seen_(t == Traversal::Logical && g.repr_ == Repr::CDup), self_(include_self) {
    g.check_live(src);
    const auto& l = g.rout_[src];
    stack_.push_back({l.data(), l.data(), l.data() + l.size(), nullptr, kSource});
  }

  bool next(std::uint32_t& out) {
    if (g_->version_ != ver_) throw ContractViolation("graph mutated during neighbor iteration");
    while (!stack_.empty()) {
      Frame& f = stack_.back();
      if (f.it == f.end) {
        stack_.pop_back();
        continue;
      }
      std::size_t pos = static_cast<std::size_t>(f.it - f.begin);
      Node n = *f.it++;
      if (f.mask && !(*f.mask)[pos]) continue;
      const std::uint8_t kind = f.kind;  // f may dangle after a push
      if (kind == kSpecs) {
        const auto& m = g_->vout_[vindex(n)];
        stack_.push_back({m.data(), m.data(), m.data() + m.size(), nullptr, kMembers});
        continue;
      }
      if (is_virtual(n)) {
        if (kind != kMembers) push_virtual(vindex(n));
        continue;
      }
      if (emit(n)) {
        out = n;
        return true;
      }
    }
    return false;
  }

  // Range support: for (auto u : g.neighbors(v)).
  class iterator {
   public:
    using value_type = std::uint32_t;
    using difference_type = std::ptrdiff_t;
    iterator() = default;
    explicit iterator(NeighborCursor* c) : c_(c) { ++*this; }
    std::uint32_t operator*() const { return cur_; }
    iterator& operator++() {
      if (!c_->next(cur_)) c_ = nullptr;
      return *this;
    }
    void operator++(int) { ++*this; }
    bool operator==(std::default_sentinel_t) const { return c_ == nullptr; }

   private:
    NeighborCursor* c_ = nullptr;
    std::uint32_t cur_ = 0;
  };
  iterator begin() { return iterator(this); }
  std::default_sentinel_t end() { return {}; }

 private:
  static constexpr std::uint8_t kSource = 0, kVirt = 1, kMembers = 2, kSpecs = 3;
  struct Frame {
    const Node* it;
    const Node* begin;
    const Node* end;
    const std::vector<bool>* mask;
    std::uint8_t kind;
  };

  void push_virtual(std::uint32_t V) {
    if (seen_ && vseen_.test_set(V)) return;
    if (repr_ == Repr::Dedup2) {
      const auto& s = g_->vspec_[V];
      stack_.push_back({s.data(), s.data(), s.data() + s.size(), nullptr, kSpecs});
      const auto& m = g_->vout_[V];
      stack_.push_back({m.data(), m.data(), m.data() + m.size(), nullptr, kMembers});
      return;
    }
    const auto& o = g_->vout_[V];
    const std::vector<bool>* mask = repr_ == Repr::Bitmap ? g_->bitmap(V, src_) : nullptr;
    stack_.push_back({o.data(), o.data(), o.data() + o.size(), mask, kVirt});
  }

  bool emit(Node r) {
    if (g_->rdead_[r]) return false;
    if (r == src_ && !self_) return false;
    if (seen_ && rseen_.test_set(r)) return false;
    return true;
  }

  const Graph* g_;
  std::uint32_t src_;
  std::uint64_t ver_;
  Repr repr_;
  bool seen_;
  bool self_;
  std::vector<Frame> stack_;
  detail::BitSet rseen_, vseen_;
};

inline NeighborCursor Graph::neighbors(std::uint32_t v, Traversal t) const { return NeighborCursor(*this, v, t); }

inline Graph Graph::expand(std::size_t budget) const {
  Graph g;
  g.ids_ = ids_;
  g.props_ = props_;
  g.rdead_ = rdead_;
  g.index_ = index_;
  g.live_reals_ = live_reals_;
  g.opts_ = opts_;
  g.repr_ = Repr::Exp;
  g.rout_.assign(ids_.size(), {});
  g.rin_.assign(ids_.size(), {});
  std::size_t count = 0;
  for (std::uint32_t r = 0; r < ids_.size(); ++r) {
    if (rdead_[r]) continue;
    auto& o = g.rout_[r];
    NeighborCursor c(*this, r, Traversal::Logical, true);
    for (std::uint32_t t; c.next(t);) o.push_back(t);
    std::sort(o.begin(), o.end());
    o.erase(std::unique(o.begin(), o.end()), o.end());
    count += o.size() - (detail::sorted_contains(o, Node{r}) ? 1 : 0);
    if (count > budget) throw BudgetExceeded(budget, count);
  }
  for (std::uint32_t r = 0; r < ids_.size(); ++r)
    for (Node t : g.rout_[r]) g.rin_[t].push_back(r);
  for (const auto& [k, p] : edge_props_)
    if (detail::sorted_contains(g.rout_[k.first], Node{k.second})) g.edge_props_[k] = p;
  return g;
}

template <class F>
void Graph::for_each_neighbor(std::uint32_t v, F&& f, Traversal t) const {
  NeighborCursor c(*this, v, t);
  std::uint32_t u;
  while (c.next(u)) f(u);
}

}  // namespace graphgen
