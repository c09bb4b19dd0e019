#pragma once

#include <algorithm>
#include <chrono>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "graphgen/dsl.hpp"
#include "graphgen/error.hpp"
#include "graphgen/graph.hpp"
#include "graphgen/store.hpp"

namespace graphgen {

struct ExtractOptions {
  bool preprocess = true;
  // Expand fully when expanded/condensed edges <= this ratio; negative disables.
  double expand_ratio = 1.2;
  // Count logical edges for the report; this walks every neighbor list once.
  bool report_expanded = true;
};

struct RulePlan {
  std::size_t rule = 0;
  RuleCase kind = RuleCase::Case1;
  JoinChain chain;
  std::vector<std::size_t> marked;  // indices into chain.joins
  std::vector<Segment> segments;
};

struct ExtractionPlan {
  std::vector<RulePlan> rules;
  bool any_case2() const {
    for (const auto& r : rules)
      if (r.kind == RuleCase::Case2) return true;
    return false;
  }
};

struct Step6Event {
  std::string label;
  std::size_t in = 0, out = 0;
  long long edge_delta = 0;  // physical edges after minus before
};

struct ExtractionReport {
  std::size_t n_r = 0;
  std::size_t n_v = 0;
  std::size_t condensed_edges = 0;
  std::size_t expanded_edges = 0;
  std::vector<double> step_times_ms;
  std::vector<std::string> expanded_virtuals;
  std::vector<std::size_t> segment_sizes;
  std::size_t edge_increase_events = 0;
  bool fully_expanded = false;
  bool case2 = false;

  nlohmann::json to_json() const {
    return {{"n_r", n_r},
            {"n_v", n_v},
            {"condensed_edges", condensed_edges},
            {"expanded_edges", expanded_edges},
            {"step_times_ms", step_times_ms},
            {"expanded_virtuals", expanded_virtuals.size()},
            {"segment_sizes", segment_sizes},
            {"edge_increase_events", edge_increase_events},
            {"fully_expanded", fully_expanded},
            {"case2", case2}};
  }
};

struct ExtractResult {
  Graph graph;
  ExtractionReport report;
  ExtractionPlan plan;
};

// Marks join i when |R_i||R_{i+1}| / d > 2(|R_i| + |R_{i+1}|), with d the larger of the
// two sides' distinct counts of the join key.
inline bool is_large_output(std::size_t left_rows, std::size_t right_rows, std::size_t d) {
  if (d == 0) return false;
  using I = __int128;
  return I(left_rows) * I(right_rows) > I(2) * I(d) * (I(left_rows) + I(right_rows));
}

inline std::size_t join_distinct(const JoinChain& c, std::size_t j, const Catalog& cat) {
  std::size_t d = 0;
  for (std::size_t side : {j, j + 1}) {
    const Atom& a = c.atoms[side];
    std::vector<std::size_t> cols;
    for (const auto& v : c.joins[j])
      for (std::size_t k = 0; k < a.args.size(); ++k)
        if (a.args[k].is_var() && a.args[k].text == v) cols.push_back(k);
    d = std::max(d, cat.distinct_count(a.relation, cols));
  }
  return d;
}

inline std::vector<std::size_t> mark_large_output(const JoinChain& c, const Catalog& cat) {
  std::vector<std::size_t> marked;
  for (std::size_t j = 0; j < c.joins.size(); ++j) {
    std::size_t l = cat.table(c.atoms[j].relation).rows();
    std::size_t r = cat.table(c.atoms[j + 1].relation).rows();
    if (is_large_output(l, r, join_distinct(c, j, cat))) marked.push_back(j);
  }
  return marked;
}

// Splits the chain at marked joins into res_1..res_k.
inline std::vector<Segment> split_segments(const JoinChain& c, const std::vector<std::size_t>& marked) {
  std::vector<Segment> segs;
  std::size_t start = 0;
  std::vector<std::string> left = {c.id1};
  for (std::size_t m : marked) {
    Segment s;
    s.atoms.assign(c.atoms.begin() + static_cast<std::ptrdiff_t>(start), c.atoms.begin() + static_cast<std::ptrdiff_t>(m + 1));
    s.left = left;
    s.right = c.joins[m];
    segs.push_back(std::move(s));
    left = c.joins[m];
    start = m + 1;
  }
  Segment last;
  last.atoms.assign(c.atoms.begin() + static_cast<std::ptrdiff_t>(start), c.atoms.end());
  last.left = left;
  last.right = {c.id2};
  segs.push_back(std::move(last));
  return segs;
}

inline ExtractionPlan plan_extraction(const ExtractionProgram& p, const Catalog& cat) {
  validate(p, cat);
  ExtractionPlan plan;
  for (std::size_t i = 0; i < p.edges_rules.size(); ++i) {
    RulePlan rp;
    rp.rule = i;
    rp.kind = classify(p.edges_rules[i]);
    if (rp.kind == RuleCase::Case1) {
      rp.chain = normalize_chain(p.edges_rules[i]);
      rp.marked = mark_large_output(rp.chain, cat);
      rp.segments = split_segments(rp.chain, rp.marked);
    }
    plan.rules.push_back(std::move(rp));
  }
  return plan;
}

namespace detail {

inline std::string render_key(const ValueDict& dict, const std::vector<std::uint32_t>& key) {
  std::string s;
  for (std::size_t i = 0; i < key.size(); ++i) s += (i ? "," : "") + to_string(dict.at(key[i]));
  return s;
}

inline void load_nodes(const ExtractionProgram& p, const Catalog& cat, Graph& g) {
  for (const auto& r : p.nodes_rules) {
    TupleSet ts = eval_conjunctive(cat, r.body, r.head);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const auto* row = ts.row(i);
      std::string id = to_string(cat.dict().at(row[0]));
      auto f = g.find(id);
      std::uint32_t idx = f ? *f : g.add_vertex(id);
      for (std::size_t k = 1; k < r.head.size(); ++k)
        if (!g.props(idx).count(r.head[k])) g.set_prop(idx, r.head[k], to_string(cat.dict().at(row[k])));
    }
  }
}

inline std::uint32_t endpoint(const Graph& g, const std::string& id, std::size_t rule) {
  auto f = g.find(id);
  if (!f) throw ExtractError("Edges rule " + std::to_string(rule + 1) + " produced endpoint '" + id +
                             "' that no Nodes rule defines");
  return *f;
}

// Evaluates every Edges body in full and loads direct edges.
inline void load_full_edges(const ExtractionProgram& p, const Catalog& cat, Graph& g,
                            std::vector<std::size_t>* sizes) {
  for (std::size_t i = 0; i < p.edges_rules.size(); ++i) {
    const Rule& r = p.edges_rules[i];
    TupleSet ts = eval_conjunctive(cat, r.body, r.head);
    if (sizes) sizes->push_back(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const auto* row = ts.row(k);
      auto a = endpoint(g, to_string(cat.dict().at(row[0])), i);
      auto b = endpoint(g, to_string(cat.dict().at(row[1])), i);
      g.add_edge_raw(Node{a}, Node{b});
      if (r.head.size() > 2 && !g.edge_props(a, b)) {
        Props pr;
        for (std::size_t h = 2; h < r.head.size(); ++h) pr[r.head[h]] = to_string(cat.dict().at(row[h]));
        g.set_edge_props(a, b, std::move(pr));
      }
    }
  }
}

inline bool step6_qualifies(const Graph& g, std::uint32_t v) {
  std::size_t in = g.in(vnode(v)).size(), out = g.out(vnode(v)).size();
  return in * out <= in + out + 1;
}

}  // namespace detail

// Replaces each virtual node with in*out <= in+out+1 by direct in->out edges, in
// ascending in*out order, until no such node remains. Returns the expanded nodes.
inline std::vector<Step6Event> preprocess_expand(Graph& g) {
  std::vector<Step6Event> events;
  for (;;) {
    std::vector<std::pair<std::size_t, std::uint32_t>> cand;
    for (std::uint32_t v = 0; v < g.virtual_capacity(); ++v)
      if (g.virtual_alive(v) && detail::step6_qualifies(g, v))
        cand.emplace_back(g.in(vnode(v)).size() * g.out(vnode(v)).size(), v);
    if (cand.empty()) break;
    std::sort(cand.begin(), cand.end());
    for (const auto& [key, v] : cand) {
      if (!g.virtual_alive(v) || !detail::step6_qualifies(g, v)) continue;
      Step6Event ev;
      ev.label = g.label(v);
      auto ins = g.in(vnode(v));
      auto outs = g.out(vnode(v));
      ev.in = ins.size();
      ev.out = outs.size();
      long long before = static_cast<long long>(ins.size() + outs.size());
      long long added = 0;
      for (Node p : ins)
        for (Node c : outs) added += g.insert_physical_edge(p, c) ? 1 : 0;
      g.remove_virtual(v);
      ev.edge_delta = added - before;
      events.push_back(std::move(ev));
    }
  }
  g.compact_virtuals();
  return events;
}

// Loads the fully expanded graph by evaluating every Edges body in full.
inline Graph extract_expanded(const ExtractionProgram& p, const Catalog& cat) {
  validate(p, cat);
  Graph g;
  detail::load_nodes(p, cat, g);
  detail::load_full_edges(p, cat, g, nullptr);
  g.normalize();
  g.set_repr(Repr::Exp);
  return g;
}

inline ExtractResult extract_condensed(const ExtractionProgram& p, const Catalog& cat, const ExtractOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  };
  ExtractResult res;
  Graph& g = res.graph;
  auto& rep = res.report;

  auto t0 = clock::now();
  validate(p, cat);
  detail::load_nodes(p, cat, g);
  auto t1 = clock::now();
  res.plan = plan_extraction(p, cat);
  for (const auto& rp : res.plan.rules)
    if (rp.kind == RuleCase::Case1 && p.edges_rules[rp.rule].head.size() > 2)
      throw ExtractError("Edges rule " + std::to_string(rp.rule + 1) +
                         " has edge properties; they are only supported for rules that are fully evaluated");
  auto t2 = clock::now();

  if (res.plan.any_case2()) {
    rep.case2 = true;
    detail::load_full_edges(p, cat, g, &rep.segment_sizes);
    auto t3 = clock::now();
    g.normalize();
    g.set_repr(Repr::Exp);
    auto t4 = clock::now();
    rep.step_times_ms = {ms(t0, t1), ms(t1, t2), ms(t2, t3), 0.0, ms(t3, t4), 0.0};
    rep.n_r = g.num_reals();
    rep.condensed_edges = g.physical_edge_count();
    rep.expanded_edges = g.count_expanded_edges();
    rep.fully_expanded = true;
    return res;
  }

  // Steps 3-5: evaluate segments, create virtual nodes per marked value, wire edges.
  std::vector<BinaryRelation> rels;
  double t_eval = 0, t_wire = 0;
  for (const auto& rp : res.plan.rules) {
    auto a = clock::now();
    std::vector<BinaryRelation> seg_rels;
    for (const auto& s : rp.segments) {
      seg_rels.push_back(eval_segment(cat, s));
      rep.segment_sizes.push_back(seg_rels.back().size());
    }
    auto b = clock::now();
    t_eval += ms(a, b);
    const std::size_t k = rp.marked.size();
    if (k == 0) {
      const auto& rel = seg_rels[0];
      std::vector<std::uint32_t> lr, rr;
      for (const auto& key : rel.left_keys) lr.push_back(detail::endpoint(g, to_string(cat.dict().at(key[0])), rp.rule));
      for (const auto& key : rel.right_keys) rr.push_back(detail::endpoint(g, to_string(cat.dict().at(key[0])), rp.rule));
      for (const auto& [l, r] : rel.pairs) g.add_edge_raw(Node{lr[l]}, Node{rr[r]});
      t_wire += ms(b, clock::now());
      continue;
    }
    // One map per marked variable: key tuple -> virtual node.
    std::vector<std::unordered_map<std::vector<std::uint32_t>, std::uint32_t, detail::TupleHash>> vmaps(k);
    auto virt = [&](std::size_t pos, const std::vector<std::uint32_t>& key) {
      auto [it, fresh] = vmaps[pos].emplace(key, 0);
      if (fresh)
        it->second = g.add_virtual(static_cast<int>(pos + 1), "e" + std::to_string(rp.rule + 1) + "." +
                                                                  std::to_string(pos + 1) + ":" +
                                                                  detail::render_key(cat.dict(), key));
      return it->second;
    };
    for (std::size_t si = 0; si < seg_rels.size(); ++si) {
      const auto& rel = seg_rels[si];
      std::vector<Node> lnodes, rnodes;
      for (const auto& key : rel.left_keys)
        lnodes.push_back(si == 0 ? Node{detail::endpoint(g, to_string(cat.dict().at(key[0])), rp.rule)}
                                 : vnode(virt(si - 1, key)));
      for (const auto& key : rel.right_keys)
        rnodes.push_back(si + 1 == seg_rels.size() ? Node{detail::endpoint(g, to_string(cat.dict().at(key[0])), rp.rule)}
                                                   : vnode(virt(si, key)));
      for (const auto& [l, r] : rel.pairs) g.add_edge_raw(lnodes[l], rnodes[r]);
    }
    t_wire += ms(b, clock::now());
  }
  auto t3 = clock::now();
  g.normalize();
  // Virtual nodes that only one side reached lead nowhere; drop them until stable.
  for (bool changed = true; changed;) {
    changed = false;
    for (std::uint32_t v = 0; v < g.virtual_capacity(); ++v)
      if (g.virtual_alive(v) && (g.in(vnode(v)).empty() || g.out(vnode(v)).empty())) {
        g.remove_virtual(v);
        changed = true;
      }
  }
  g.compact_virtuals();
  auto t4 = clock::now();

  // Step 6.
  if (opt.preprocess) {
    for (auto& ev : preprocess_expand(g)) {
      if (ev.edge_delta > 0) ++rep.edge_increase_events;
      rep.expanded_virtuals.push_back(std::move(ev.label));
    }
  }
  rep.condensed_edges = g.physical_edge_count();
  if (opt.expand_ratio >= 0 && g.num_virtuals() > 0) {
    const double cap = opt.expand_ratio * static_cast<double>(rep.condensed_edges);
    const auto limit = static_cast<std::size_t>(std::min(cap, static_cast<double>(Graph::kNoBudget / 2)));
    if (static_cast<double>(g.count_expanded_edges(limit)) <= cap) {
      g = g.expand();
      rep.fully_expanded = true;
      rep.condensed_edges = g.physical_edge_count();
    }
  }
  auto t5 = clock::now();
  if (opt.report_expanded) rep.expanded_edges = g.count_expanded_edges();
  // Steps 4 and 5 are interleaved; 4 gets the normalize/prune pass, 5 the wiring.
  rep.step_times_ms = {ms(t0, t1), ms(t1, t2), t_eval, ms(t3, t4), t_wire, ms(t4, t5)};
  rep.n_r = g.num_reals();
  rep.n_v = g.num_virtuals();
  return res;
}

inline ExtractResult extract_condensed(const std::string& dsl, const Catalog& cat, const ExtractOptions& opt = {}) {
  return extract_condensed(parse(dsl), cat, opt);
}

}  // namespace graphgen
