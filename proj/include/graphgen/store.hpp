#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "graphgen/error.hpp"
#include "graphgen/query.hpp"

namespace graphgen {

enum class ColumnType { Integer, String };

inline const char* type_name(ColumnType t) { return t == ColumnType::Integer ? "integer" : "string"; }

using Value = std::variant<std::int64_t, std::string>;

inline std::string to_string(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t out = 0;
  if (s.empty()) return std::nullopt;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return out;
}

// Interns values so tables and join results can be handled as integer codes.
class ValueDict {
 public:
  std::uint32_t intern(const Value& v) {
    auto it = index_.find(v);
    if (it != index_.end()) return it->second;
    auto code = static_cast<std::uint32_t>(values_.size());
    values_.push_back(v);
    index_.emplace(v, code);
    return code;
  }
  std::optional<std::uint32_t> find(const Value& v) const {
    auto it = index_.find(v);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const Value& at(std::uint32_t code) const { return values_.at(code); }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<Value> values_;
  std::unordered_map<Value, std::uint32_t> index_;
};

struct Column {
  std::string name;
  ColumnType type = ColumnType::Integer;
  // False when the type could not be inferred (no rows); such columns join with anything.
  bool typed = true;
};

struct ColumnStats {
  std::size_t row_count = 0;
  std::vector<std::size_t> distinct_count;
};

class Table {
 public:
  Table(std::string name, std::vector<Column> columns, std::shared_ptr<ValueDict> dict)
      : name_(std::move(name)), columns_(std::move(columns)), dict_(std::move(dict)),
        codes_(columns_.size()) {}

  const std::string& name() const { return name_; }
  const std::vector<Column>& columns() const { return columns_; }
  std::size_t arity() const { return columns_.size(); }
  std::size_t rows() const { return codes_.empty() ? 0 : codes_[0].size(); }

  std::optional<std::size_t> column_index(const std::string& col) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i].name == col) return i;
    return std::nullopt;
  }
  std::uint32_t code(std::size_t row, std::size_t col) const { return codes_[col][row]; }
  const std::vector<std::uint32_t>& column_codes(std::size_t col) const { return codes_[col]; }
  const Value& at(std::size_t row, std::size_t col) const { return dict_->at(codes_[col][row]); }

  void append(const std::vector<Value>& row) {
    if (row.size() != columns_.size())
      throw IngestError(rows() + 1, "expected " + std::to_string(columns_.size()) + " fields");
    for (std::size_t c = 0; c < row.size(); ++c) {
      bool is_int = std::holds_alternative<std::int64_t>(row[c]);
      if (is_int != (columns_[c].type == ColumnType::Integer))
        throw TypeError("column '" + columns_[c].name + "' of table '" + name_ + "' expects " +
                        type_name(columns_[c].type) + " values");
    }
    for (std::size_t c = 0; c < row.size(); ++c) codes_[c].push_back(dict_->intern(row[c]));
  }

 private:
  std::string name_;
  std::vector<Column> columns_;
  std::shared_ptr<ValueDict> dict_;
  std::vector<std::vector<std::uint32_t>> codes_;
};

namespace detail {

struct TupleHash {
  std::size_t operator()(const std::vector<std::uint32_t>& t) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto x : t) {
      h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

// One CSV record; quoted marks fields that were enclosed in double quotes.
struct CsvRecord {
  std::vector<std::string> fields;
  std::vector<bool> quoted;
};

inline std::vector<CsvRecord> parse_csv(const std::string& text) {
  std::vector<CsvRecord> out;
  CsvRecord rec;
  std::string field;
  bool quoted = false, in_quotes = false, any = false;
  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    rec.quoted.push_back(quoted);
    field.clear();
    quoted = false;
  };
  auto end_record = [&] {
    end_field();
    out.push_back(std::move(rec));
    rec = {};
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      in_quotes = quoted = any = true;
    } else if (c == ',') {
      end_field();
      any = true;
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      // swallowed; the '\n' ends the record
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (in_quotes) throw IngestError(out.size(), "unterminated quoted field");
  if (any || !field.empty() || !rec.fields.empty()) end_record();
  return out;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos && !s.empty()) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace detail

class Catalog {
 public:
  Catalog() : dict_(std::make_shared<ValueDict>()) {}

  const ValueDict& dict() const { return *dict_; }

  Table& create_table(const std::string& name, std::vector<Column> columns) {
    if (tables_.count(name)) throw NameClash("table '" + name + "' already exists");
    std::unordered_set<std::string> seen;
    for (const auto& c : columns)
      if (!seen.insert(c.name).second)
        throw IngestError(0, "duplicate column '" + c.name + "' in table '" + name + "'");
    auto& e = tables_.emplace(name, Entry{Table(name, std::move(columns), dict_), {}}).first->second;
    return e.table;
  }

  // Recomputes statistics; call after populating a table built with create_table.
  void finalize(const std::string& name) {
    auto& e = entry(name);
    e.stats.row_count = e.table.rows();
    e.stats.distinct_count.assign(e.table.arity(), 0);
    for (std::size_t c = 0; c < e.table.arity(); ++c) {
      std::unordered_set<std::uint32_t> s(e.table.column_codes(c).begin(), e.table.column_codes(c).end());
      e.stats.distinct_count[c] = s.size();
    }
    composite_cache_.erase(name);
  }

  const Table& add_table(const std::string& name, std::vector<Column> columns,
                         const std::vector<std::vector<Value>>& rows) {
    auto& t = create_table(name, std::move(columns));
    try {
      for (const auto& r : rows) t.append(r);
    } catch (...) {
      tables_.erase(name);
      throw;
    }
    finalize(name);
    return t;
  }

  // Loads a CSV file with a mandatory header. Without a schema, a column is integer
  // when every value parses as one.
  const Table& load_table(const std::filesystem::path& path, const std::string& name,
                          const std::optional<std::vector<ColumnType>>& schema = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_csv_text(ss.str(), name, schema);
  }

  const Table& load_csv_text(const std::string& text, const std::string& name,
                             const std::optional<std::vector<ColumnType>>& schema = std::nullopt) {
    if (tables_.count(name)) throw NameClash("table '" + name + "' already exists");
    auto recs = detail::parse_csv(text);
    if (recs.empty()) throw IngestError(0, "missing header row");
    const auto& header = recs[0].fields;
    const std::size_t width = header.size();
    for (std::size_t i = 0; i < width; ++i)
      if (header[i].empty()) throw IngestError(0, "empty column name");
    if (schema && schema->size() != width)
      throw IngestError(0, "schema has " + std::to_string(schema->size()) + " types for " +
                               std::to_string(width) + " columns");
    for (std::size_t r = 1; r < recs.size(); ++r) {
      if (recs[r].fields.size() != width)
        throw IngestError(r, "expected " + std::to_string(width) + " fields, got " +
                                 std::to_string(recs[r].fields.size()));
      for (std::size_t c = 0; c < width; ++c)
        if (recs[r].fields[c].empty() && !recs[r].quoted[c])
          throw IngestError(r, "empty field in column '" + header[c] + "' (NULLs are not supported)");
    }
    std::vector<Column> cols(width);
    for (std::size_t c = 0; c < width; ++c) {
      cols[c].name = header[c];
      if (schema) {
        cols[c].type = (*schema)[c];
      } else {
        bool all_int = true;
        for (std::size_t r = 1; r < recs.size() && all_int; ++r)
          all_int = parse_int(recs[r].fields[c]).has_value();
        cols[c].type = all_int ? ColumnType::Integer : ColumnType::String;
        cols[c].typed = recs.size() > 1;
      }
    }
    auto& t = create_table(name, cols);
    try {
      std::vector<Value> row(width);
      for (std::size_t r = 1; r < recs.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
          const auto& f = recs[r].fields[c];
          if (cols[c].type == ColumnType::Integer) {
            auto v = parse_int(f);
            if (!v) throw IngestError(r, "value '" + f + "' in column '" + header[c] + "' is not an integer");
            row[c] = *v;
          } else {
            row[c] = f;
          }
        }
        t.append(row);
      }
    } catch (...) {
      tables_.erase(name);
      throw;
    }
    finalize(name);
    return t;
  }

  // Loads every *.csv file in a directory; the table name is the file stem.
  void load_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw InputError("'" + dir.string() + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) load_table(f, f.stem().string());
  }

  bool has_table(const std::string& name) const { return tables_.count(name) > 0; }
  const Table& table(const std::string& name) const { return entry(name).table; }
  const ColumnStats& stats(const std::string& name) const { return entry(name).stats; }

  std::vector<std::string> table_names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : tables_) out.push_back(k);
    return out;
  }

  std::size_t distinct_count(const std::string& table, const std::string& column) const {
    const auto& e = entry(table);
    auto c = e.table.column_index(column);
    if (!c) throw CatalogError("table '" + table + "' has no column '" + column + "'");
    return e.stats.distinct_count[*c];
  }

  // Exact distinct count of a combination of columns (composite join keys).
  std::size_t distinct_count(const std::string& table, const std::vector<std::size_t>& cols) const {
    const auto& e = entry(table);
    for (auto c : cols)
      if (c >= e.table.arity()) throw CatalogError("column index out of range for '" + table + "'");
    if (cols.size() == 1) return e.stats.distinct_count[cols[0]];
    auto key = cols;
    auto& cache = composite_cache_[table];
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    std::unordered_set<std::vector<std::uint32_t>, detail::TupleHash> s;
    std::vector<std::uint32_t> t(cols.size());
    for (std::size_t r = 0; r < e.table.rows(); ++r) {
      for (std::size_t i = 0; i < cols.size(); ++i) t[i] = e.table.code(r, cols[i]);
      s.insert(t);
    }
    cache[key] = s.size();
    return s.size();
  }

  void write_csv(const std::string& name, const std::filesystem::path& path) const {
    const auto& t = table(name);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    for (std::size_t c = 0; c < t.arity(); ++c) out << (c ? "," : "") << detail::csv_escape(t.columns()[c].name);
    out << '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
      for (std::size_t c = 0; c < t.arity(); ++c) {
        const auto& v = t.at(r, c);
        out << (c ? "," : "");
        if (std::holds_alternative<std::int64_t>(v)) out << std::get<std::int64_t>(v);
        else out << detail::csv_escape(std::get<std::string>(v));
      }
      out << '\n';
    }
  }

 private:
  struct Entry {
    Table table;
    ColumnStats stats;
  };
  const Entry& entry(const std::string& name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) throw CatalogError("unknown table '" + name + "'");
    return it->second;
  }
  Entry& entry(const std::string& name) {
    auto it = tables_.find(name);
    if (it == tables_.end()) throw CatalogError("unknown table '" + name + "'");
    return it->second;
  }

  std::shared_ptr<ValueDict> dict_;
  std::map<std::string, Entry> tables_;
  mutable std::map<std::string, std::map<std::vector<std::size_t>, std::size_t>> composite_cache_;
};

// Rows of value codes over a list of variables, sorted and duplicate free.
struct TupleSet {
  std::vector<std::string> vars;
  std::vector<std::uint32_t> data;  // row-major, vars.size() codes per row

  std::size_t width() const { return vars.size(); }
  std::size_t size() const { return vars.empty() ? (data.empty() ? 0 : 1) : data.size() / vars.size(); }
  const std::uint32_t* row(std::size_t i) const { return data.data() + i * vars.size(); }
};

// Distinct pairs over interned boundary tuples. For single-variable boundaries the
// key tuples hold one value code each.
struct BinaryRelation {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // sorted, unique
  std::vector<std::vector<std::uint32_t>> left_keys;
  std::vector<std::vector<std::uint32_t>> right_keys;

  std::size_t size() const { return pairs.size(); }
};

namespace detail {

inline void sort_unique_rows(std::vector<std::uint32_t>& data, std::size_t w) {
  if (w == 0) {
    if (data.size() > 1) data.resize(0);
    return;
  }
  const std::size_t n = data.size() / w;
  if (w == 1) {
    std::sort(data.begin(), data.end());
    data.erase(std::unique(data.begin(), data.end()), data.end());
    return;
  }
  if (w == 2) {
    std::vector<std::uint64_t> packed(n);
    for (std::size_t i = 0; i < n; ++i)
      packed[i] = (std::uint64_t(data[2 * i]) << 32) | data[2 * i + 1];
    std::sort(packed.begin(), packed.end());
    packed.erase(std::unique(packed.begin(), packed.end()), packed.end());
    data.resize(packed.size() * 2);
    for (std::size_t i = 0; i < packed.size(); ++i) {
      data[2 * i] = std::uint32_t(packed[i] >> 32);
      data[2 * i + 1] = std::uint32_t(packed[i]);
    }
    return;
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  auto less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(data.begin() + a * w, data.begin() + (a + 1) * w,
                                        data.begin() + b * w, data.begin() + (b + 1) * w);
  };
  auto eq = [&](std::size_t a, std::size_t b) {
    return std::equal(data.begin() + a * w, data.begin() + (a + 1) * w, data.begin() + b * w);
  };
  std::sort(idx.begin(), idx.end(), less);
  idx.erase(std::unique(idx.begin(), idx.end(), eq), idx.end());
  std::vector<std::uint32_t> out;
  out.reserve(idx.size() * w);
  for (auto i : idx) out.insert(out.end(), data.begin() + i * w, data.begin() + (i + 1) * w);
  data.swap(out);
}

}  // namespace detail

// Evaluates a conjunction of atoms with left-to-right hash joins and returns the
// distinct projection onto out_vars. Intermediate results are projected onto the
// variables still needed and deduplicated after every join.
inline TupleSet eval_conjunctive(const Catalog& cat, const std::vector<Atom>& atoms,
                                 const std::vector<std::string>& out_vars) {
  std::vector<std::string> vars;            // current binding columns
  std::vector<std::uint32_t> data = {};     // rows of codes
  std::size_t nrows = 1;                    // one empty binding to start
  std::map<std::string, std::pair<ColumnType, bool>> var_type;

  for (std::size_t ai = 0; ai < atoms.size(); ++ai) {
    const Atom& atom = atoms[ai];
    const Table& t = cat.table(atom.relation);
    if (atom.args.size() != t.arity())
      throw CatalogError("atom " + atom.relation + " has " + std::to_string(atom.args.size()) +
                         " arguments but the table has " + std::to_string(t.arity()) + " columns");

    // Selection predicates: constants and repeated variables within the atom.
    std::vector<std::pair<std::size_t, std::uint32_t>> const_eq;
    bool impossible = false;
    std::vector<std::pair<std::size_t, std::size_t>> self_eq;
    std::vector<std::string> avars;
    std::vector<std::size_t> apos;
    for (std::size_t c = 0; c < atom.args.size(); ++c) {
      const Term& term = atom.args[c];
      const Column& col = t.columns()[c];
      if (term.is_var()) {
        auto it = std::find(avars.begin(), avars.end(), term.text);
        if (it != avars.end()) {
          self_eq.emplace_back(apos[it - avars.begin()], c);
        } else {
          avars.push_back(term.text);
          apos.push_back(c);
        }
        auto vt = var_type.find(term.text);
        if (vt != var_type.end() && vt->second.second && col.typed && vt->second.first != col.type)
          throw TypeError("variable '" + term.text + "' joins " + type_name(vt->second.first) +
                          " with " + type_name(col.type) + " column " + atom.relation + "." + col.name);
        if (vt == var_type.end() || (!vt->second.second && col.typed)) var_type[term.text] = {col.type, col.typed};
      } else {
        Value v = term.kind == Term::Kind::Int ? Value(term.ival) : Value(term.text);
        bool is_int = term.kind == Term::Kind::Int;
        if (col.typed && is_int != (col.type == ColumnType::Integer))
          throw TypeError("constant does not match " + std::string(type_name(col.type)) + " column " +
                          atom.relation + "." + col.name);
        auto code = cat.dict().find(v);
        if (!code) impossible = true;
        else const_eq.emplace_back(c, *code);
      }
    }

    // Variables needed after this atom.
    std::unordered_set<std::string> needed(out_vars.begin(), out_vars.end());
    for (std::size_t j = ai + 1; j < atoms.size(); ++j)
      for (const auto& term : atoms[j].args)
        if (term.is_var()) needed.insert(term.text);

    std::vector<std::size_t> shared_b, shared_a;  // positions in bindings / atom columns
    for (std::size_t i = 0; i < avars.size(); ++i) {
      auto it = std::find(vars.begin(), vars.end(), avars[i]);
      if (it != vars.end()) {
        shared_b.push_back(it - vars.begin());
        shared_a.push_back(apos[i]);
      }
    }
    // Output columns: (from binding, index) or (from atom, column).
    std::vector<std::string> nvars;
    std::vector<std::pair<bool, std::size_t>> src;
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (needed.count(vars[i])) {
        nvars.push_back(vars[i]);
        src.emplace_back(true, i);
      }
    for (std::size_t i = 0; i < avars.size(); ++i)
      if (needed.count(avars[i]) && std::find(nvars.begin(), nvars.end(), avars[i]) == nvars.end()) {
        nvars.push_back(avars[i]);
        src.emplace_back(false, apos[i]);
      }

    // Filtered atom rows.
    std::vector<std::uint32_t> arows;
    if (!impossible) {
      for (std::size_t r = 0; r < t.rows(); ++r) {
        bool ok = true;
        for (auto [c, code] : const_eq)
          if (t.code(r, c) != code) { ok = false; break; }
        for (auto [a, b] : self_eq)
          if (ok && t.code(r, a) != t.code(r, b)) ok = false;
        if (ok) arows.push_back(static_cast<std::uint32_t>(r));
      }
    }

    const std::size_t w = vars.size(), nw = nvars.size();
    std::vector<std::uint32_t> out;
    std::size_t emitted = 0;
    auto emit = [&](std::size_t brow, std::uint32_t arow) {
      ++emitted;
      for (auto [from_b, i] : src) out.push_back(from_b ? data[brow * w + i] : t.code(arow, i));
    };
    if (shared_b.empty()) {
      for (std::size_t b = 0; b < nrows; ++b)
        for (auto r : arows) emit(b, r);
    } else if (shared_b.size() == 1) {
      std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> ht;
      for (auto r : arows) ht[t.code(r, shared_a[0])].push_back(r);
      for (std::size_t b = 0; b < nrows; ++b) {
        auto it = ht.find(data[b * w + shared_b[0]]);
        if (it == ht.end()) continue;
        for (auto r : it->second) emit(b, r);
      }
    } else {
      std::unordered_map<std::vector<std::uint32_t>, std::vector<std::uint32_t>, detail::TupleHash> ht;
      std::vector<std::uint32_t> key(shared_a.size());
      for (auto r : arows) {
        for (std::size_t i = 0; i < shared_a.size(); ++i) key[i] = t.code(r, shared_a[i]);
        ht[key].push_back(r);
      }
      for (std::size_t b = 0; b < nrows; ++b) {
        for (std::size_t i = 0; i < shared_b.size(); ++i) key[i] = data[b * w + shared_b[i]];
        auto it = ht.find(key);
        if (it == ht.end()) continue;
        for (auto r : it->second) emit(b, r);
      }
    }
    if (nw == 0) {
      // No column survives; only whether some binding matched matters.
      vars.clear();
      data.clear();
      nrows = emitted > 0 ? 1 : 0;
      continue;
    }
    detail::sort_unique_rows(out, nw);
    vars = std::move(nvars);
    data = std::move(out);
    nrows = data.size() / nw;
  }

  TupleSet res;
  res.vars = out_vars;
  std::vector<std::size_t> pos;
  for (const auto& v : out_vars) {
    auto it = std::find(vars.begin(), vars.end(), v);
    if (it == vars.end()) throw CatalogError("output variable '" + v + "' is not bound by the body");
    pos.push_back(it - vars.begin());
  }
  const std::size_t w = vars.size();
  if (out_vars.empty()) return res;
  res.data.reserve(nrows * pos.size());
  for (std::size_t r = 0; r < nrows; ++r)
    for (auto p : pos) res.data.push_back(data[r * w + p]);
  detail::sort_unique_rows(res.data, pos.size());
  return res;
}

// Evaluates a chain segment and returns distinct (left key, right key) pairs.
inline BinaryRelation eval_segment(const Catalog& cat, const Segment& seg) {
  std::vector<std::string> out = seg.left;
  out.insert(out.end(), seg.right.begin(), seg.right.end());
  // A variable may sit on both boundaries only for degenerate segments; keep positions.
  std::vector<std::string> uniq;
  for (const auto& v : out)
    if (std::find(uniq.begin(), uniq.end(), v) == uniq.end()) uniq.push_back(v);
  TupleSet ts = eval_conjunctive(cat, seg.atoms, uniq);
  auto idx = [&](const std::string& v) {
    return static_cast<std::size_t>(std::find(uniq.begin(), uniq.end(), v) - uniq.begin());
  };
  std::vector<std::size_t> lp, rp;
  for (const auto& v : seg.left) lp.push_back(idx(v));
  for (const auto& v : seg.right) rp.push_back(idx(v));

  BinaryRelation rel;
  std::unordered_map<std::vector<std::uint32_t>, std::uint32_t, detail::TupleHash> lidx, ridx;
  std::vector<std::uint32_t> lk(lp.size()), rk(rp.size());
  auto intern = [](auto& map, auto& keys, const std::vector<std::uint32_t>& k) {
    auto [it, fresh] = map.emplace(k, static_cast<std::uint32_t>(keys.size()));
    if (fresh) keys.push_back(k);
    return it->second;
  };
  rel.pairs.reserve(ts.size());
  for (std::size_t r = 0; r < ts.size(); ++r) {
    const auto* row = ts.row(r);
    for (std::size_t i = 0; i < lp.size(); ++i) lk[i] = row[lp[i]];
    for (std::size_t i = 0; i < rp.size(); ++i) rk[i] = row[rp[i]];
    rel.pairs.emplace_back(intern(lidx, rel.left_keys, lk), intern(ridx, rel.right_keys, rk));
  }
  std::sort(rel.pairs.begin(), rel.pairs.end());
  rel.pairs.erase(std::unique(rel.pairs.begin(), rel.pairs.end()), rel.pairs.end());
  return rel;
}

namespace detail {

inline std::string sql_literal(const Term& t) {
  if (t.kind == Term::Kind::Int) return std::to_string(t.ival);
  std::string s = "'";
  for (char c : t.text) {
    if (c == '\'') s += "''";
    else s.push_back(c);
  }
  return s + "'";
}

}  // namespace detail

// SQL text for a conjunctive fragment: SELECT DISTINCT with explicit INNER JOIN ... ON
// clauses, atoms in rule order, aliases t1..tn when more than one atom is involved.
inline std::string emit_sql(const Catalog& cat, const std::vector<Atom>& atoms,
                            const std::vector<std::string>& out_vars) {
  if (atoms.empty()) throw CatalogError("cannot emit SQL for an empty body");
  const bool aliased = atoms.size() > 1;
  auto ref = [&](std::size_t a, std::size_t c) {
    const auto& col = cat.table(atoms[a].relation).columns()[c].name;
    return aliased ? "t" + std::to_string(a + 1) + "." + col : col;
  };
  for (const auto& a : atoms)
    if (a.args.size() != cat.table(a.relation).arity())
      throw CatalogError("atom " + a.relation + " does not match the table arity");
  // First occurrence of every variable.
  std::map<std::string, std::pair<std::size_t, std::size_t>> first;
  std::vector<std::string> where;
  std::vector<std::vector<std::string>> on(atoms.size());
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    for (std::size_t c = 0; c < atoms[a].args.size(); ++c) {
      const Term& t = atoms[a].args[c];
      if (!t.is_var()) {
        where.push_back(ref(a, c) + " = " + detail::sql_literal(t));
        continue;
      }
      auto it = first.find(t.text);
      if (it == first.end()) {
        first[t.text] = {a, c};
      } else if (it->second.first == a) {
        where.push_back(ref(it->second.first, it->second.second) + " = " + ref(a, c));
      } else {
        on[a].push_back(ref(it->second.first, it->second.second) + " = " + ref(a, c));
      }
    }
  }
  std::string sql = "SELECT DISTINCT ";
  for (std::size_t i = 0; i < out_vars.size(); ++i) {
    auto it = first.find(out_vars[i]);
    if (it == first.end()) throw CatalogError("output variable '" + out_vars[i] + "' is not bound by the body");
    const auto& col = cat.table(atoms[it->second.first].relation).columns()[it->second.second].name;
    sql += (i ? ", " : "") + ref(it->second.first, it->second.second);
    if (col != out_vars[i]) sql += " AS " + out_vars[i];
  }
  sql += " FROM " + atoms[0].relation + (aliased ? " AS t1" : "");
  for (std::size_t a = 1; a < atoms.size(); ++a) {
    sql += " INNER JOIN " + atoms[a].relation + " AS t" + std::to_string(a + 1) + " ON ";
    if (on[a].empty()) sql += "1 = 1";
    for (std::size_t i = 0; i < on[a].size(); ++i) sql += (i ? " AND " : "") + on[a][i];
  }
  for (std::size_t i = 0; i < where.size(); ++i) sql += (i ? " AND " : " WHERE ") + where[i];
  return sql;
}

inline std::string emit_sql(const Catalog& cat, const Segment& seg) {
  std::vector<std::string> out = seg.left;
  for (const auto& v : seg.right)
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return emit_sql(cat, seg.atoms, out);
}

}  // namespace graphgen
