#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "graphgen/graphgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace graphgen;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("bad JSON in '" + path + "': " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write '" + path + "'");
  os << text;
}

json graph_summary(const Graph& g) {
  return {{"repr", repr_name(g.repr())},
          {"real_nodes", g.num_reals()},
          {"virtual_nodes", g.num_virtuals()},
          {"edges", g.physical_edge_count()}};
}

// Everything one invocation needs to be rerun, plus what it produced.
struct Manifest {
  json doc = json::object();
  std::string path;

  void write() const {
    if (path.empty()) {
      std::cerr << "manifest: " << doc.dump() << "\n";
      return;
    }
    try {
      write_text(path, doc.dump(2) + "\n");
    } catch (const std::exception& e) {
      std::cerr << "warning: " << e.what() << "\n";
    }
  }
};

struct Common {
  std::string in, out, manifest, report;
  unsigned workers = 1;
  bool json_out = false;
  bool include_self = false;
  std::size_t budget = 100'000'000;
};

Graph load_graph(const Common& c) {
  Graph g = load_condensed(c.in);
  g.options().include_self = c.include_self;
  return g;
}

void emit(const Common& c, Manifest& m, const json& metrics) {
  m.doc["metrics"] = metrics;
  if (!c.report.empty()) write_text(c.report, metrics.dump(2) + "\n");
  if (c.json_out) std::cout << metrics.dump(2) << "\n";
}

Graph build_repr(const Graph& cdup, const std::string& name, const Ordering& ord, unsigned workers, std::size_t budget) {
  if (name == "cdup") return cdup;
  if (name == "exp") return cdup.expand(budget);
  if (name == "bitmap") return bitmap2(cdup, ord, workers);
  if (name == "dedup1") return greedy_virtual_first(cdup, ord);
  return run_dedup(parse_algo(name), cdup, ord, workers);
}

json bench(const json& cfg, unsigned workers, std::size_t budget) {
  json out;
  const json ds = cfg.value("dataset", json::object());
  const std::string kind = ds.value("kind", "enrollments");
  Graph cdup;
  if (kind == "condensed") {
    cdup = generate_condensed(GeneratorConfig::from_json(ds));
  } else {
    Catalog cat;
    GeneratedTables gt = kind == "tables" ? generate_tables(TableGenConfig::from_json(ds), cat)
                         : kind == "enrollments" ? generate_enrollments(EnrollmentConfig::from_json(ds), cat)
                                                 : throw ConfigError("unknown dataset kind '" + kind + "'");
    auto prog = parse(gt.query);
    ExtractOptions eo;
    eo.expand_ratio = cfg.value("expand_ratio", eo.expand_ratio);
    eo.report_expanded = false;  // counted below, outside the timed region
    auto t0 = std::chrono::steady_clock::now();
    auto res = extract_condensed(prog, cat, eo);
    out["extract_condensed_ms"] = ms_since(t0);
    res.report.expanded_edges = res.graph.count_expanded_edges();
    out["report"] = res.report.to_json();
    cdup = std::move(res.graph);
    if (cfg.value("full_extraction", true) && cdup.count_expanded_edges() <= budget) {
      t0 = std::chrono::steady_clock::now();
      auto full = extract_expanded(prog, cat);
      out["extract_expanded_ms"] = ms_since(t0);
    }
  }
  const auto condensed = cdup.physical_edge_count();
  const auto expanded = cdup.count_expanded_edges();
  out["dataset"] = ds;
  out["condensed_edges"] = condensed;
  out["expanded_edges"] = expanded;
  out["ratio"] = condensed ? static_cast<double>(expanded) / static_cast<double>(condensed) : 0.0;
  const Ordering ord = Ordering::parse(cfg.value("order", std::string("rand:1")));
  const std::string algo = cfg.value("algorithm", std::string("pagerank"));
  auto reprs = cfg.value("representations", std::vector<std::string>{"cdup", "exp", "bitmap2", "greedy-vfirst"});
  json rows = json::array();
  for (const auto& name : reprs) {
    auto t0 = std::chrono::steady_clock::now();
    Graph g = build_repr(cdup, name, ord, workers, budget);
    double build_ms = ms_since(t0);
    BuiltinParams bp;
    if (algo == "bfs") bp.source = g.id(g.vertices().front());
    auto r = run_builtin(algo, g, bp, workers);
    rows.push_back({{"representation", name},
                    {"build_ms", build_ms},
                    {"algo_ms", r.wall_ms},
                    {"real_nodes", g.num_reals()},
                    {"virtual_nodes", g.num_virtuals()},
                    {"edges", g.physical_edge_count()},
                    {"logical_edges", g.count_expanded_edges()}});
  }
  out["algorithm"] = algo;
  out["results"] = rows;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extract, deduplicate and analyze graphs hidden in relational tables"};
  app.require_subcommand(1);
  Common c;
  Manifest manifest;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--manifest", c.manifest, "Where to write the run manifest (default: <out>.manifest.json)");
    s->add_flag("--json", c.json_out, "Print metrics JSON to stdout");
    s->add_option("--report", c.report, "Write metrics JSON to this file");
  };

  // extract
  std::string tables, query, repr = "cdup";
  bool no_pre = false;
  double expand_ratio = 1.2;
  auto* ex = app.add_subcommand("extract", "Tables + extraction query -> condensed graph file");
  ex->add_option("--tables", tables, "Directory of CSV tables")->required();
  ex->add_option("--query", query, "Extraction program file")->required();
  ex->add_option("--out", c.out, "Output graph file")->required();
  ex->add_option("--repr", repr, "cdup or exp")->check(CLI::IsMember({"cdup", "exp"}));
  ex->add_flag("--no-preprocess", no_pre, "Skip expanding small virtual nodes");
  ex->add_option("--expand-ratio", expand_ratio, "Expand fully when expanded/condensed is at most this (<0 disables)");
  ex->add_option("--budget", c.budget, "Edge budget for --repr exp");
  add_common(ex);

  // dedup
  std::string algo = "greedy-vfirst", order = "rand:0";
  auto* dd = app.add_subcommand("dedup", "Remove duplicate paths from a C-DUP graph");
  dd->add_option("--in", c.in, "Input graph file")->required();
  dd->add_option("--out", c.out, "Output graph file")->required();
  dd->add_option("--algo", algo, "bitmap1|bitmap2|naive-vfirst|naive-rfirst|greedy-rfirst|greedy-vfirst|dedup2");
  dd->add_option("--order", order, "rand:<seed>|asc-dup|desc-dup|asc-deg|desc-deg");
  dd->add_option("--workers", c.workers)->check(CLI::PositiveNumber);
  add_common(dd);

  // run
  std::string source;
  PageRankOptions pr;
  bool residual = false;
  std::string builtin = "pagerank";
  auto* rn = app.add_subcommand("run", "Run a built-in graph algorithm");
  rn->add_option("--in", c.in, "Input graph file")->required();
  rn->add_option("--out", c.out, "Results CSV")->required();
  rn->add_option("--algo", builtin, "degree|pagerank|bfs|wcc");
  rn->add_option("--source", source, "BFS source vertex id");
  rn->add_option("--iters", pr.iterations, "PageRank iterations");
  rn->add_option("--alpha", pr.alpha, "PageRank damping");
  rn->add_flag("--residual", residual, "Stop PageRank once the L1 change is below 1e-8");
  rn->add_option("--workers", c.workers)->check(CLI::PositiveNumber);
  rn->add_flag("--include-self", c.include_self, "Report self-pairs as neighbors");
  add_common(rn);

  // generate
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  auto* gen = app.add_subcommand("generate", "Generate a condensed graph or tables from a JSON config");
  gen->add_option("--config", config, "Generator config JSON")->required();
  gen->add_option("--out", c.out, "Graph file, or directory for tables")->required();
  gen->add_option("--seed", seed, "Override the config seed")->each([&](const std::string&) { seed_set = true; });
  add_common(gen);

  // export
  auto* exp = app.add_subcommand("export", "Write the logical edge list of a graph");
  exp->add_option("--in", c.in, "Input graph file")->required();
  exp->add_option("--out", c.out, "Edge list file")->required();
  exp->add_option("--budget", c.budget, "Maximum number of edges to write");
  exp->add_flag("--include-self", c.include_self, "Include self-pairs");
  add_common(exp);

  // bench
  auto* bn = app.add_subcommand("bench", "Build representations and time an algorithm on each");
  bn->add_option("--config", config, "Bench config JSON")->required();
  bn->add_option("--out", c.out, "Write the result JSON here (default: stdout)");
  bn->add_option("--workers", c.workers)->check(CLI::PositiveNumber);
  bn->add_option("--budget", c.budget, "Edge budget for expanded builds");
  add_common(bn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto* sub = app.get_subcommands().front();
  manifest.path = !c.manifest.empty() ? c.manifest : (!c.out.empty() ? c.out + ".manifest.json" : "");
  manifest.doc["command"] = sub->get_name();
  manifest.doc["argv"] = std::vector<std::string>(argv, argv + argc);
  manifest.doc["inputs"] = json::object();
  manifest.doc["outputs"] = json::array();
  if (!c.out.empty()) manifest.doc["outputs"].push_back(c.out);

  int code = 0;
  try {
    auto t0 = std::chrono::steady_clock::now();
    if (sub == ex) {
      manifest.doc["inputs"] = {{"tables", tables}, {"query", query}};
      const std::string dsl = read_file(query);
      manifest.doc["dsl"] = dsl;
      manifest.doc["representation"] = repr;
      Catalog cat;
      cat.load_directory(tables);
      ExtractOptions eo;
      eo.preprocess = !no_pre;
      eo.expand_ratio = expand_ratio;
      auto res = extract_condensed(dsl, cat, eo);
      Graph g = repr == "exp" ? res.graph.expand(c.budget) : std::move(res.graph);
      save_condensed(g, c.out);
      json m = res.report.to_json();
      m["total_ms"] = ms_since(t0);
      m["graph"] = graph_summary(g);
      emit(c, manifest, m);
    } else if (sub == dd) {
      manifest.doc["inputs"] = {{"graph", c.in}};
      manifest.doc["algorithm"] = algo;
      manifest.doc["ordering"] = order;
      manifest.doc["workers"] = c.workers;
      const Algo a = parse_algo(algo);
      const Ordering ord = Ordering::parse(order);
      Graph g = load_graph(c);
      auto before = check_duplication(g);
      auto t1 = std::chrono::steady_clock::now();
      Graph d = run_dedup(a, g, ord, c.workers);
      double algo_ms = ms_since(t1);
      save_condensed(d, c.out);
      auto after = check_duplication(d);
      json m = {{"before", before.to_json()},
                {"duplication", after.to_json()},
                {"dedup_ms", algo_ms},
                {"input", graph_summary(g)},
                {"graph", graph_summary(d)}};
      emit(c, manifest, m);
      if (after.count != 0) throw ContractViolation("duplication remains after " + algo);
    } else if (sub == rn) {
      manifest.doc["inputs"] = {{"graph", c.in}};
      manifest.doc["algorithm"] = builtin;
      manifest.doc["workers"] = c.workers;
      Graph g = load_graph(c);
      BuiltinParams bp;
      bp.pagerank = pr;
      bp.pagerank.residual = residual;
      bp.source = source;
      if (builtin == "bfs" && source.empty()) throw ConfigError("bfs needs --source");
      BuiltinResult r;
      try {
        r = run_builtin(builtin, g, bp, c.workers);
      } catch (const StaleHandle& e) {
        throw InputError(e.what());
      }
      std::ofstream os(c.out);
      if (!os) throw InputError("cannot write '" + c.out + "'");
      write_results_csv(g, r, os);
      emit(c, manifest, r.metadata());
    } else if (sub == gen) {
      json cfg = read_json(config);
      if (seed_set) cfg["seed"] = seed;
      manifest.doc["inputs"] = {{"config", config}};
      manifest.doc["config"] = cfg;
      const std::string kind = cfg.value("kind", "condensed");
      json m = {{"kind", kind}};
      if (kind == "condensed" || kind == "random") {
        Graph g;
        if (kind == "condensed") {
          g = generate_condensed(GeneratorConfig::from_json(cfg));
        } else {
          RandomGraphConfig rc;
          rc.reals = cfg.value("reals", rc.reals);
          rc.virtuals = cfg.value("virtuals", rc.virtuals);
          rc.layers = cfg.value("layers", rc.layers);
          rc.symmetric = cfg.value("symmetric", rc.symmetric);
          rc.seed = cfg.value("seed", rc.seed);
          g = generate_random_condensed(rc);
        }
        save_condensed(g, c.out);
        m["graph"] = graph_summary(g);
        m["expanded_edges"] = g.count_expanded_edges();
      } else if (kind == "tables" || kind == "enrollments") {
        Catalog cat;
        auto gt = kind == "tables" ? generate_tables(TableGenConfig::from_json(cfg), cat)
                                   : generate_enrollments(EnrollmentConfig::from_json(cfg), cat);
        fs::create_directories(c.out);
        json tabs = json::object();
        for (const auto& t : gt.tables) {
          cat.write_csv(t, fs::path(c.out) / (t + ".csv"));
          tabs[t] = cat.table(t).rows();
        }
        write_text((fs::path(c.out) / "query.gg").string(), gt.query);
        m["tables"] = tabs;
        m["query"] = gt.query;
      } else {
        throw ConfigError("unknown generator kind '" + kind + "'");
      }
      m["total_ms"] = ms_since(t0);
      emit(c, manifest, m);
    } else if (sub == exp) {
      manifest.doc["inputs"] = {{"graph", c.in}};
      manifest.doc["budget"] = c.budget;
      Graph g = load_graph(c);
      std::ofstream os(c.out);
      if (!os) throw InputError("cannot write '" + c.out + "'");
      auto n = write_edge_list(g, os, c.budget);
      emit(c, manifest, {{"edges", n}, {"total_ms", ms_since(t0)}});
    } else if (sub == bn) {
      json cfg = read_json(config);
      manifest.doc["inputs"] = {{"config", config}};
      manifest.doc["config"] = cfg;
      json r = bench(cfg, cfg.value("workers", c.workers), c.budget);
      r["total_ms"] = ms_since(t0);
      if (!c.out.empty()) write_text(c.out, r.dump(2) + "\n");
      else if (!c.json_out) std::cout << r.dump(2) << "\n";
      emit(c, manifest, r);
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    code = 2;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    code = 3;
  } catch (const json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    code = 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    code = 4;
  }
  manifest.doc["exit_code"] = code;
  manifest.write();
  return code;
}
