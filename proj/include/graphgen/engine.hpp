#pragma once

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "graphgen/error.hpp"
#include "graphgen/graph.hpp"
#include "graphgen/store.hpp"

namespace graphgen {

// Read-only view handed to compute: the graph plus last superstep's values.
template <class State>
class NeighborView {
 public:
  NeighborView(const Graph& g, const std::vector<State>& prev, Traversal t) : g_(g), prev_(prev), t_(t) {}

  const Graph& graph() const { return g_; }
  const State& value(std::uint32_t u) const { return prev_[u]; }
  template <class F>
  void for_each_out(std::uint32_t v, F&& f) const {
    g_.for_each_neighbor(v, std::forward<F>(f), t_);
  }
  template <class F>
  void for_each_in(std::uint32_t v, F&& f) const {
    g_.for_each_in_neighbor(v, std::forward<F>(f));
  }

 private:
  const Graph& g_;
  const std::vector<State>& prev_;
  Traversal t_;
};

template <class State>
struct VertexProgram {
  // (vertex, current state, view, superstep) -> (next state, vote to halt)
  std::function<std::pair<State, bool>(std::uint32_t, const State&, const NeighborView<State>&, std::size_t)> compute;
  std::function<State(std::uint32_t)> init;
  // Optional global stop test on (previous, next) after each superstep.
  std::function<bool(const std::vector<State>&, const std::vector<State>&, std::size_t)> converged;
  // Optional single-threaded hook run before each superstep on the previous values.
  std::function<void(const std::vector<State>&, std::size_t)> aggregate;
  // Optional observer of the values produced by each superstep.
  std::function<void(const std::vector<State>&, std::size_t)> observe;
  Traversal traversal = Traversal::Logical;
};

template <class State>
struct RunResult {
  std::vector<State> values;  // indexed by real index; dead slots keep their initial value
  std::size_t supersteps = 0;
};

template <class State>
RunResult<State> run(const VertexProgram<State>& prog, const Graph& g, unsigned workers = 1,
                     std::size_t max_supersteps = 100) {
  workers = std::max(1u, workers);
  const auto verts = g.vertices();
  const std::uint64_t version = g.version();
  RunResult<State> res;
  std::vector<State> cur(g.real_capacity()), next;
  for (std::uint32_t r = 0; r < g.real_capacity(); ++r) cur[r] = prog.init(r);
  next = cur;
  if (max_supersteps == 0) {
    res.values = std::move(cur);
    return res;
  }
  const std::size_t n = verts.size();
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<char> halted(g.real_capacity(), 0);
  std::vector<std::size_t> fail_vertex(workers, std::numeric_limits<std::size_t>::max());
  std::vector<std::string> fail_what(workers);
  std::size_t step = 0;
  bool done = false;
  std::exception_ptr abort_err;

  auto finish_step = [&]() noexcept {
    try {
      std::size_t worst = std::numeric_limits<std::size_t>::max();
      std::string what;
      for (unsigned w = 0; w < workers; ++w)
        if (fail_vertex[w] < worst) {
          worst = fail_vertex[w];
          what = fail_what[w];
        }
      if (worst != std::numeric_limits<std::size_t>::max()) throw ComputeError(worst, what);
      if (g.version() != version) throw ContractViolation("graph topology changed during run");
      bool all_halt = true;
      for (auto v : verts) all_halt = all_halt && halted[v];
      bool conv = prog.converged && prog.converged(cur, next, step);
      if (prog.observe) prog.observe(next, step);
      std::swap(cur, next);
      ++step;
      done = all_halt || conv || step >= max_supersteps;
      if (!done && prog.aggregate) prog.aggregate(cur, step);
    } catch (...) {
      abort_err = std::current_exception();
      done = true;
    }
  };

  if (prog.aggregate) prog.aggregate(cur, 0);
  std::barrier sync(static_cast<std::ptrdiff_t>(workers), finish_step);
  auto body = [&](unsigned w) {
    const std::size_t b = std::min(n, w * chunk), e = std::min(n, b + chunk);
    while (true) {
      NeighborView<State> view(g, cur, prog.traversal);
      for (std::size_t i = b; i < e; ++i) {
        const std::uint32_t v = verts[i];
        try {
          auto [s, halt] = prog.compute(v, cur[v], view, step);
          next[v] = std::move(s);
          halted[v] = halt ? 1 : 0;
        } catch (const std::exception& ex) {
          if (v < fail_vertex[w]) {
            fail_vertex[w] = v;
            fail_what[w] = ex.what();
          }
        }
      }
      sync.arrive_and_wait();
      if (done) break;
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> ts;
    for (unsigned w = 0; w < workers; ++w) ts.emplace_back(body, w);
    for (auto& t : ts) t.join();
  }
  if (abort_err) std::rethrow_exception(abort_err);
  res.values = std::move(cur);
  res.supersteps = step;
  return res;
}

// ---- built-ins ----

struct PageRankOptions {
  double alpha = 0.85;
  std::size_t iterations = 20;
  bool residual = false;  // stop early once the L1 change drops below tolerance
  double tolerance = 1e-8;
};

struct BuiltinResult {
  std::string algorithm;
  std::vector<double> values;
  bool labels = false;  // values are real indices naming a component representative
  std::size_t supersteps = 0;
  double wall_ms = 0;
  unsigned workers = 1;
  std::vector<double> sums;  // pagerank mass after each superstep

  nlohmann::json metadata() const {
    return {{"algorithm", algorithm}, {"supersteps", supersteps}, {"wall_ms", wall_ms}, {"workers", workers}};
  }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::vector<double> degrees(const Graph& g, unsigned workers = 1) {
  VertexProgram<double> p;
  p.init = [](std::uint32_t) { return 0.0; };
  p.compute = [](std::uint32_t v, const double&, const NeighborView<double>& view, std::size_t) {
    double d = 0;
    view.for_each_out(v, [&](std::uint32_t) { d += 1; });
    return std::pair{d, true};
  };
  return run(p, g, workers, 1).values;
}

namespace detail {

inline BuiltinResult timed(const char* name, unsigned workers, const std::function<void(BuiltinResult&)>& f) {
  BuiltinResult r;
  r.algorithm = name;
  r.workers = std::max(1u, workers);
  auto t0 = std::chrono::steady_clock::now();
  f(r);
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace detail

inline BuiltinResult degree(const Graph& g, unsigned workers = 1) {
  return detail::timed("degree", workers, [&](BuiltinResult& r) {
    r.values = degrees(g, workers);
    r.supersteps = 1;
  });
}

inline BuiltinResult pagerank(const Graph& g, const PageRankOptions& o = {}, unsigned workers = 1) {
  return detail::timed("pagerank", workers, [&](BuiltinResult& r) {
    const auto deg = degrees(g, workers);
    const auto verts = g.vertices();
    const double n = static_cast<double>(verts.size());
    if (verts.empty()) return;
    double dangling = 0;
    VertexProgram<double> p;
    p.init = [&](std::uint32_t v) { return g.alive(v) ? 1.0 / n : 0.0; };
    p.aggregate = [&](const std::vector<double>& prev, std::size_t) {
      dangling = 0;
      for (auto v : verts)
        if (deg[v] == 0) dangling += prev[v];
    };
    p.compute = [&](std::uint32_t v, const double&, const NeighborView<double>& view, std::size_t) {
      double s = 0;
      view.for_each_in(v, [&](std::uint32_t u) { s += view.value(u) / deg[u]; });
      return std::pair{(1.0 - o.alpha) / n + o.alpha * (s + dangling / n), false};
    };
    p.observe = [&](const std::vector<double>& next, std::size_t) {
      double t = 0;
      for (auto v : verts) t += next[v];
      r.sums.push_back(t);
    };
    if (o.residual)
      p.converged = [&](const std::vector<double>& a, const std::vector<double>& b, std::size_t) {
        double l1 = 0;
        for (auto v : verts) l1 += std::fabs(a[v] - b[v]);
        return l1 < o.tolerance;
      };
    auto res = run(p, g, workers, o.iterations);
    r.values = std::move(res.values);
    r.supersteps = res.supersteps;
  });
}

inline BuiltinResult bfs(const Graph& g, const std::string& source, unsigned workers = 1) {
  const std::uint32_t src = g.index_of(source);
  return detail::timed("bfs", workers, [&](BuiltinResult& r) {
    VertexProgram<double> p;
    p.init = [&](std::uint32_t v) { return v == src ? 0.0 : kInf; };
    p.compute = [](std::uint32_t v, const double& d, const NeighborView<double>& view, std::size_t) {
      double best = d;
      view.for_each_in(v, [&](std::uint32_t u) { best = std::min(best, view.value(u) + 1); });
      return std::pair{best, best == d};
    };
    auto res = run(p, g, workers, g.real_capacity() + 1);
    r.values = std::move(res.values);
    r.supersteps = res.supersteps;
  });
}

// Min-label propagation over out- and in-neighbors. On C-DUP the raw traversal
// is used: repeated labels do not change a minimum.
inline BuiltinResult wcc(const Graph& g, unsigned workers = 1) {
  return detail::timed("wcc", workers, [&](BuiltinResult& r) {
    VertexProgram<double> p;
    p.traversal = g.repr() == Repr::CDup ? Traversal::Raw : Traversal::Logical;
    p.init = [](std::uint32_t v) { return static_cast<double>(v); };
    p.compute = [](std::uint32_t v, const double& l, const NeighborView<double>& view, std::size_t) {
      double best = l;
      auto take = [&](std::uint32_t u) { best = std::min(best, view.value(u)); };
      view.for_each_out(v, take);
      view.for_each_in(v, take);
      return std::pair{best, best == l};
    };
    auto res = run(p, g, workers, g.real_capacity() + 1);
    r.values = std::move(res.values);
    r.labels = true;
    r.supersteps = res.supersteps;
  });
}

struct BuiltinParams {
  PageRankOptions pagerank;
  std::string source;
};

inline BuiltinResult run_builtin(const std::string& name, const Graph& g, const BuiltinParams& p = {},
                                 unsigned workers = 1) {
  if (name == "degree") return degree(g, workers);
  if (name == "pagerank") return pagerank(g, p.pagerank, workers);
  if (name == "bfs") return bfs(g, p.source, workers);
  if (name == "wcc") return wcc(g, workers);
  throw ConfigError("unknown algorithm '" + name + "'");
}

inline std::string format_value(double v) {
  if (std::isinf(v)) return "inf";
  if (v == std::floor(v) && std::fabs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// "vertexId,value" rows sorted by vertex id.
inline void write_results_csv(const Graph& g, const BuiltinResult& r, std::ostream& os) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (auto v : g.vertices()) {
    std::string val = r.labels ? g.id(static_cast<std::uint32_t>(r.values[v])) : format_value(r.values[v]);
    rows.emplace_back(g.id(v), std::move(val));
  }
  std::sort(rows.begin(), rows.end());
  os << "vertexId,value\n";
  for (const auto& [id, val] : rows) os << detail::csv_escape(id) << ',' << detail::csv_escape(val) << '\n';
}

}  // namespace graphgen
