#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace graphgen {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: files, schemas, queries, configs. Maps to CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

class IngestError : public InputError {
 public:
  IngestError(std::size_t row, const std::string& what)
      : InputError("ingest error at row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class NameClash : public InputError {
 public:
  using InputError::InputError;
};

class CatalogError : public InputError {
 public:
  using InputError::InputError;
};

class TypeError : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  ParseError(int line, int col, const std::string& what)
      : InputError(std::to_string(line) + ":" + std::to_string(col) + ": " + what),
        line_(line), col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

class UnboundHeadVariable : public ParseError {
 public:
  UnboundHeadVariable(int line, int col, const std::string& var)
      : ParseError(line, col, "head variable '" + var + "' does not appear in the body"),
        var_(var) {}
  const std::string& variable() const { return var_; }

 private:
  std::string var_;
};

class NotChainable : public InputError {
 public:
  using InputError::InputError;
};

class ExtractError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class UnsupportedLayering : public InputError {
 public:
  using InputError::InputError;
};

class UnsupportedShape : public InputError {
 public:
  using InputError::InputError;
};

// Expansion would exceed the configured edge budget. Exit code 3.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(std::size_t budget, std::size_t needed)
      : Error("edge budget of " + std::to_string(budget) + " exceeded (needs at least " +
              std::to_string(needed) + ")"),
        budget_(budget), needed_(needed) {}
  std::size_t budget() const { return budget_; }
  std::size_t needed() const { return needed_; }

 private:
  std::size_t budget_;
  std::size_t needed_;
};

class StaleHandle : public Error {
 public:
  using Error::Error;
};

// API misuse or a broken internal invariant. Exit code 4.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class ComputeError : public Error {
 public:
  ComputeError(std::size_t vertex, const std::string& what)
      : Error("compute failed at vertex " + std::to_string(vertex) + ": " + what), vertex_(vertex) {}
  std::size_t vertex() const { return vertex_; }

 private:
  std::size_t vertex_;
};

}  // namespace graphgen
