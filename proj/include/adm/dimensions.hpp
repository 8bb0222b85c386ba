#pragma once

// Buckingham pi machinery: quantities carry rational exponent vectors over a
// set of base dimensions, and dimensionless groups are obtained by solving the
// homogeneous dimension equations exactly.

#include <boost/rational.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adm::dimensions {

using Rational = boost::rational<std::int64_t>;

class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSymbol : public DimensionError {
 public:
  explicit UnknownSymbol(const std::string& symbol)
      : DimensionError("unknown quantity symbol '" + symbol + "'"), symbol_(symbol) {}
  const std::string& symbol() const noexcept { return symbol_; }

 private:
  std::string symbol_;
};

class SingularSystem : public DimensionError {
 public:
  explicit SingularSystem(const std::string& target)
      : DimensionError("repeating quantities cannot non-dimensionalize '" + target + "'"), target_(target) {}
  const std::string& target() const noexcept { return target_; }

 private:
  std::string target_;
};

/// Parses "p/q", "-p/q" or an integer.
inline Rational parse_rational(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text.empty()) return Rational(0);
  auto parse_int = [&](std::string_view s) -> std::int64_t {
    s = trim(s);
    std::size_t used = 0;
    std::string str(s);
    std::int64_t v = 0;
    try {
      v = std::stoll(str, &used);
    } catch (const std::exception&) {
      throw DimensionError("invalid rational '" + std::string(text) + "'");
    }
    if (used != str.size()) throw DimensionError("invalid rational '" + std::string(text) + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(parse_int(text));
  const std::int64_t den = parse_int(text.substr(slash + 1));
  if (den == 0) throw DimensionError("zero denominator in '" + std::string(text) + "'");
  return Rational(parse_int(text.substr(0, slash)), den);
}

inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

/// Exponents over base-dimension symbols. Zero exponents are never stored, so
/// equality of the maps is exact dimensional equality.
class DimensionVector {
 public:
  DimensionVector() = default;
  DimensionVector(std::initializer_list<std::pair<const std::string, Rational>> init) {
    for (const auto& [dim, e] : init) set(dim, e);
  }

  Rational operator[](const std::string& dim) const {
    auto it = exponents_.find(dim);
    return it == exponents_.end() ? Rational(0) : it->second;
  }

  void set(const std::string& dim, Rational e) {
    if (e.numerator() == 0)
      exponents_.erase(dim);
    else
      exponents_[dim] = e;
  }

  bool is_dimensionless() const noexcept { return exponents_.empty(); }
  const std::map<std::string, Rational>& exponents() const noexcept { return exponents_; }

  DimensionVector& operator+=(const DimensionVector& other) {
    for (const auto& [dim, e] : other.exponents_) set(dim, (*this)[dim] + e);
    return *this;
  }
  friend DimensionVector operator+(DimensionVector a, const DimensionVector& b) { return a += b; }
  friend DimensionVector operator*(Rational s, const DimensionVector& v) {
    DimensionVector out;
    for (const auto& [dim, e] : v.exponents_) out.set(dim, s * e);
    return out;
  }
  bool operator==(const DimensionVector&) const = default;

  friend std::ostream& operator<<(std::ostream& os, const DimensionVector& v) {
    if (v.is_dimensionless()) return os << "1";
    bool first = true;
    for (const auto& [dim, e] : v.exponents_) {
      if (!first) os << ' ';
      first = false;
      os << dim;
      if (e != Rational(1)) os << '^' << to_string(e);
    }
    return os;
  }

 private:
  std::map<std::string, Rational> exponents_;
};

struct Quantity {
  std::string symbol;
  std::string name;
  DimensionVector dims;
};

/// A dimensionless product of quantity powers. The target quantity carries
/// exponent +1; zero exponents are omitted.
struct PiGroup {
  std::string target;
  std::string label;
  std::map<std::string, Rational> exponents;

  Rational exponent(const std::string& symbol) const {
    auto it = exponents.find(symbol);
    return it == exponents.end() ? Rational(0) : it->second;
  }
};

class QuantitySystem {
 public:
  QuantitySystem(std::vector<Quantity> quantities, std::vector<std::string> repeating,
                 std::vector<std::string> base_dims = {"F", "L", "T"},
                 std::optional<std::string> predictand = std::nullopt)
      : quantities_(std::move(quantities)),
        repeating_(std::move(repeating)),
        base_dims_(std::move(base_dims)),
        predictand_(std::move(predictand)) {
    std::set<std::string> seen;
    for (const auto& q : quantities_) {
      if (!seen.insert(q.symbol).second) throw DimensionError("duplicate quantity symbol '" + q.symbol + "'");
      for (const auto& [dim, e] : q.dims.exponents())
        if (std::find(base_dims_.begin(), base_dims_.end(), dim) == base_dims_.end())
          throw DimensionError("quantity '" + q.symbol + "' uses undeclared base dimension '" + dim + "'");
    }
    std::set<std::string> rep;
    for (const auto& s : repeating_) {
      find(s);
      if (!rep.insert(s).second) throw DimensionError("repeating quantity '" + s + "' listed twice");
    }
    if (predictand_) find(*predictand_);
  }

  const std::vector<Quantity>& quantities() const noexcept { return quantities_; }
  const std::vector<std::string>& repeating() const noexcept { return repeating_; }
  const std::vector<std::string>& base_dims() const noexcept { return base_dims_; }
  const std::optional<std::string>& predictand() const noexcept { return predictand_; }

  const Quantity& find(const std::string& symbol) const {
    for (const auto& q : quantities_)
      if (q.symbol == symbol) return q;
    throw UnknownSymbol(symbol);
  }

  bool is_repeating(const std::string& symbol) const {
    return std::find(repeating_.begin(), repeating_.end(), symbol) != repeating_.end();
  }

  /// Optional display labels (e.g. the conventional pi indices of a preset).
  std::map<std::string, std::string> labels;

 private:
  std::vector<Quantity> quantities_;
  std::vector<std::string> repeating_;
  std::vector<std::string> base_dims_;
  std::optional<std::string> predictand_;
};

inline DimensionVector dimension_product(const QuantitySystem& system,
                                         const std::map<std::string, Rational>& exponents) {
  DimensionVector out;
  for (const auto& [symbol, e] : exponents) out += e * system.find(symbol).dims;
  return out;
}

namespace detail {

using Matrix = std::vector<std::vector<Rational>>;

/// Row-reduces in place and returns the rank.
inline std::size_t row_reduce(Matrix& m, std::size_t ncols) {
  std::size_t rank = 0;
  for (std::size_t col = 0; col < ncols && rank < m.size(); ++col) {
    std::size_t pivot = rank;
    while (pivot < m.size() && m[pivot][col].numerator() == 0) ++pivot;
    if (pivot == m.size()) continue;
    std::swap(m[rank], m[pivot]);
    const Rational p = m[rank][col];
    for (auto& v : m[rank]) v /= p;
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == rank || m[r][col].numerator() == 0) continue;
      const Rational f = m[r][col];
      for (std::size_t c = 0; c < m[r].size(); ++c) m[r][c] -= f * m[rank][c];
    }
    ++rank;
  }
  return rank;
}

/// Matrix with one row per base dimension and one column per listed quantity.
inline Matrix dimension_matrix(const QuantitySystem& system, const std::vector<std::string>& symbols) {
  Matrix m(system.base_dims().size(), std::vector<Rational>(symbols.size()));
  for (std::size_t j = 0; j < symbols.size(); ++j) {
    const auto& dims = system.find(symbols[j]).dims;
    for (std::size_t i = 0; i < system.base_dims().size(); ++i) m[i][j] = dims[system.base_dims()[i]];
  }
  return m;
}

inline std::size_t rank_of(const QuantitySystem& system, const std::vector<std::string>& symbols) {
  auto m = dimension_matrix(system, symbols);
  return row_reduce(m, symbols.size());
}

}  // namespace detail

/// Result of validate_repeating: empty diagnostic means the set is usable.
struct RepeatingCheck {
  bool ok = true;
  std::string diagnostic;
  explicit operator bool() const noexcept { return ok; }
};

inline RepeatingCheck validate_repeating(const QuantitySystem& system) {
  const auto& rep = system.repeating();
  if (system.predictand() && system.is_repeating(*system.predictand()))
    return {false, "predictand " + *system.predictand() + " is in the repeating set"};

  for (std::size_t j = 0; j < rep.size(); ++j) {
    std::vector<std::string> prefix(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(j) + 1);
    if (detail::rank_of(system, prefix) <= j) {
      std::string others;
      for (std::size_t i = 0; i < j; ++i) others += (i ? "," : "") + rep[i];
      if (others.empty()) return {false, rep[j] + " is dimensionless and cannot be a repeating quantity"};
      return {false, "dimension vector of " + rep[j] + " is linearly dependent on {" + others + "}"};
    }
  }

  std::vector<std::string> all;
  for (const auto& q : system.quantities()) all.push_back(q.symbol);
  const std::size_t full_rank = detail::rank_of(system, all);
  if (rep.size() != full_rank)
    return {false, "repeating set has " + std::to_string(rep.size()) + " quantities but the dimension matrix has rank " +
                       std::to_string(full_rank)};
  return {};
}

namespace detail {

inline PiGroup solve_group(const QuantitySystem& system, const std::string& target) {
  const auto& rep = system.repeating();
  const auto& dims = system.find(target).dims;
  // Augmented system: sum_j x_j dims(R_j) = -dims(target).
  Matrix m = dimension_matrix(system, rep);
  for (std::size_t i = 0; i < m.size(); ++i) m[i].push_back(-dims[system.base_dims()[i]]);
  const std::size_t rank = row_reduce(m, rep.size());
  for (std::size_t r = rank; r < m.size(); ++r)
    if (m[r].back().numerator() != 0) throw SingularSystem(target);

  PiGroup group;
  group.target = target;
  auto label = system.labels.find(target);
  group.label = label == system.labels.end() ? target : label->second;
  group.exponents[target] = 1;
  // Columns are independent (validated), so row r holds the pivot of column r.
  for (std::size_t r = 0; r < rank; ++r) {
    std::size_t col = 0;
    while (m[r][col].numerator() == 0) ++col;
    if (m[r].back().numerator() != 0) group.exponents[rep[col]] = m[r].back();
  }
  return group;
}

}  // namespace detail

inline PiGroup derive_pi_group(const QuantitySystem& system, const std::string& target) {
  system.find(target);
  if (system.is_repeating(target)) throw DimensionError("target " + target + " is a repeating quantity");
  if (auto check = validate_repeating(system); !check) throw DimensionError(check.diagnostic);
  return detail::solve_group(system, target);
}

inline std::vector<PiGroup> derive_pi_system(const QuantitySystem& system) {
  if (auto check = validate_repeating(system); !check) throw DimensionError(check.diagnostic);
  std::vector<PiGroup> groups;
  for (const auto& q : system.quantities())
    if (!system.is_repeating(q.symbol)) groups.push_back(detail::solve_group(system, q.symbol));
  return groups;
}

/// The nine accumulated-damage quantities with repeating set {Q4, Q5, Q9}.
/// Area is encoded as L^2. The stress rate Q6 has dimension F L^-2 T^-1.
inline QuantitySystem table1_system() {
  const Rational one(1), neg1(-1), neg2(-2);
  std::vector<Quantity> q = {
      {"Q1", "damage rate", {{"T", neg1}}},
      {"Q2", "damage", {}},
      {"Q3", "stress", {{"F", one}, {"L", neg2}}},
      {"Q4", "short-term strength", {{"F", one}, {"L", neg2}}},
      {"Q5", "mean failure time", {{"T", one}}},
      {"Q6", "stress rate", {{"F", one}, {"L", neg2}, {"T", neg1}}},
      {"Q7", "width", {{"L", one}}},
      {"Q8", "thickness", {{"L", one}}},
      {"Q9", "length", {{"L", one}}},
  };
  QuantitySystem system(std::move(q), {"Q4", "Q5", "Q9"}, {"F", "L", "T"}, "Q1");
  system.labels = {{"Q1", "pi1"}, {"Q2", "pi2"}, {"Q3", "pi3"}, {"Q6", "pi6"}, {"Q7", "pi7"}, {"Q8", "pi8"}};
  return system;
}

/// Drag force on a body in a fluid stream, in force-length-time dimensions.
inline QuantitySystem fluid_force_system() {
  std::vector<Quantity> q = {
      {"F", "drag force", {{"F", Rational(1)}}},
      {"L", "body length", {{"L", Rational(1)}}},
      {"V", "fluid velocity", {{"L", Rational(1)}, {"T", Rational(-1)}}},
      {"rho", "fluid density", {{"F", Rational(1)}, {"L", Rational(-4)}, {"T", Rational(2)}}},
      {"mu", "dynamic viscosity", {{"F", Rational(1)}, {"L", Rational(-2)}, {"T", Rational(1)}}},
  };
  return QuantitySystem(std::move(q), {"L", "V", "rho"}, {"F", "L", "T"}, "F");
}

/// Reads `symbol,name,<dim>,<dim>,...`; the dimension columns name the base set.
inline QuantitySystem read_quantities_csv(std::istream& in, std::vector<std::string> repeating,
                                          std::optional<std::string> predictand = std::nullopt) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      cells.push_back(cell);
    }
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw DimensionError("quantities CSV is empty");
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "symbol" || header[1] != "name")
    throw DimensionError("quantities CSV header must start with symbol,name");
  std::vector<std::string> base(header.begin() + 2, header.end());
  std::vector<Quantity> quantities;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() < 2 || cells.size() > header.size())
      throw DimensionError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                           " columns");
    Quantity q{cells[0], cells[1], {}};
    for (std::size_t j = 2; j < cells.size(); ++j) q.dims.set(base[j - 2], parse_rational(cells[j]));
    quantities.push_back(std::move(q));
  }
  return QuantitySystem(std::move(quantities), std::move(repeating), std::move(base), std::move(predictand));
}

/// Emits `group,symbol,exponent`, target first, then repeating quantities in system order.
inline void write_pi_csv(std::ostream& out, const QuantitySystem& system, const std::vector<PiGroup>& groups) {
  out << "group,symbol,exponent\n";
  for (const auto& g : groups) {
    out << g.label << ',' << g.target << ',' << to_string(g.exponent(g.target)) << '\n';
    for (const auto& q : system.quantities()) {
      if (q.symbol == g.target) continue;
      const Rational e = g.exponent(q.symbol);
      if (e.numerator() != 0) out << g.label << ',' << q.symbol << ',' << to_string(e) << '\n';
    }
  }
}

}  // namespace adm::dimensions
