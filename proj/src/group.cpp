#include "coarse/group.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "coarse/errors.hpp"

namespace coarse {

std::size_t ElementHash::operator()(const Element& g) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ULL ^ g.size();
  for (auto c : g) {
    h ^= std::hash<std::int64_t>{}(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

bool coordinate_less(const Element& a, const Element& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto ka = std::make_pair(a[i] < 0 ? -a[i] : a[i], a[i] < 0);
    auto kb = std::make_pair(b[i] < 0 ? -b[i] : b[i], b[i] < 0);
    if (ka != kb) return ka < kb;
  }
  return false;
}

namespace {

std::int64_t parse_int64(std::string_view text) {
  std::int64_t v = 0;
  auto first = text.data();
  auto last = text.data() + text.size();
  while (first != last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  while (last != first && std::isspace(static_cast<unsigned char>(*(last - 1)))) --last;
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw DomainError("bad integer '" + std::string(text) + "' in group element");
  }
  return v;
}

std::vector<std::int64_t> parse_tuple(std::string_view text) {
  std::string t(text);
  t.erase(std::remove_if(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); }), t.end());
  if (t.size() >= 2 && t.front() == '(' && t.back() == ')') t = t.substr(1, t.size() - 2);
  std::vector<std::int64_t> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= t.size(); ++i) {
    if (i == t.size() || t[i] == ',' || t[i] == ';') {
      out.push_back(parse_int64(std::string_view(t).substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------- Z^n

class LatticeGroup final : public GroupModel {
 public:
  explicit LatticeGroup(int n) : n_(n) {
    if (n < 1) throw DomainError("lattice rank must be positive");
    for (int i = 0; i < n; ++i) {
      Element e(n, 0);
      e[i] = 1;
      gens_.push_back(e);
      e[i] = -1;
      gens_.push_back(e);
    }
  }
  Element identity() const override { return Element(n_, 0); }
  Element multiply(const Element& a, const Element& b) const override {
    Element out(n_);
    for (int i = 0; i < n_; ++i) out[i] = a[i] + b[i];
    return out;
  }
  Element inverse(const Element& a) const override {
    Element out(n_);
    for (int i = 0; i < n_; ++i) out[i] = -a[i];
    return out;
  }
  const std::vector<Element>& generators() const override { return gens_; }
  std::string format(const Element& g) const override {
    if (n_ == 1) return std::to_string(g[0]);
    std::string out = "(";
    for (int i = 0; i < n_; ++i) {
      if (i) out += ",";
      out += std::to_string(g[i]);
    }
    return out + ")";
  }
  Element parse(std::string_view text) const override {
    auto v = parse_tuple(text);
    if (static_cast<int>(v.size()) != n_) throw DomainError("expected " + std::to_string(n_) + " coordinates");
    return v;
  }
  std::optional<std::int64_t> word_length(const Element& g) const override {
    std::int64_t s = 0;
    for (auto c : g) s += c < 0 ? -c : c;
    return s;
  }
  std::optional<std::int64_t> distance(const Element& a, const Element& b) const override {
    std::int64_t s = 0;
    for (int i = 0; i < n_; ++i) s += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
    return s;
  }
  bool abelian() const override { return true; }
  nlohmann::json descriptor() const override {
    if (n_ == 1) return {{"preset", "Z"}};
    return {{"preset", "Zn"}, {"n", n_}};
  }

 private:
  int n_;
  std::vector<Element> gens_;
};

// ---------------------------------------------------------------- free groups

class FreeGroup final : public GroupModel {
 public:
  explicit FreeGroup(int rank) : rank_(rank) {
    if (rank < 1 || rank > 26) throw DomainError("free group rank must be in 1..26");
    for (int i = 1; i <= rank; ++i) {
      gens_.push_back({i});
      gens_.push_back({-i});
    }
  }
  Element identity() const override { return {}; }
  Element multiply(const Element& a, const Element& b) const override {
    Element out = a;
    for (auto letter : b) {
      if (!out.empty() && out.back() == -letter) {
        out.pop_back();
      } else {
        out.push_back(letter);
      }
    }
    return out;
  }
  Element inverse(const Element& a) const override {
    Element out(a.rbegin(), a.rend());
    for (auto& c : out) c = -c;
    return out;
  }
  const std::vector<Element>& generators() const override { return gens_; }
  std::string format(const Element& g) const override {
    if (g.empty()) return "e";
    std::string out;
    for (auto c : g) {
      char base = c > 0 ? 'a' : 'A';
      out.push_back(static_cast<char>(base + (c > 0 ? c : -c) - 1));
    }
    return out;
  }
  Element parse(std::string_view text) const override {
    if (text == "e") return {};
    Element word;
    for (char ch : text) {
      std::int64_t letter = 0;
      if (ch >= 'a' && ch < 'a' + rank_) letter = ch - 'a' + 1;
      else if (ch >= 'A' && ch < 'A' + rank_) letter = -(ch - 'A' + 1);
      else throw DomainError(std::string("bad free group letter '") + ch + "'");
      word = multiply(word, {letter});
    }
    return word;
  }
  std::optional<std::int64_t> word_length(const Element& g) const override {
    return static_cast<std::int64_t>(g.size());
  }
  nlohmann::json descriptor() const override { return {{"preset", "free"}, {"rank", rank_}}; }

 private:
  int rank_;
  std::vector<Element> gens_;
};

// ---------------------------------------------------------------- finite tables

class TableGroup final : public GroupModel {
 public:
  TableGroup(std::vector<std::vector<int>> table, std::vector<int> gens, std::optional<int> cyclic)
      : table_(std::move(table)), cyclic_(cyclic) {
    auto m = static_cast<int>(table_.size());
    if (m == 0) throw DomainError("empty multiplication table");
    for (const auto& row : table_) {
      if (static_cast<int>(row.size()) != m) throw DomainError("multiplication table is not square");
      for (int v : row) {
        if (v < 0 || v >= m) throw DomainError("multiplication table entry out of range");
      }
    }
    inverse_.assign(m, -1);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        if (table_[a][b] == 0) inverse_[a] = b;
      }
      if (inverse_[a] < 0) throw DomainError("table element without inverse");
    }
    std::set<int> symmetric;
    for (int g : gens) {
      if (g < 0 || g >= m) throw DomainError("generator out of range");
      if (g == 0) continue;
      symmetric.insert(g);
      symmetric.insert(inverse_[g]);
    }
    for (int g : symmetric) gens_.push_back({g});
    std::sort(gens_.begin(), gens_.end(), coordinate_less);
    gen_list_ = std::move(gens);
  }
  Element identity() const override { return {0}; }
  Element multiply(const Element& a, const Element& b) const override { return {table_[a[0]][b[0]]}; }
  Element inverse(const Element& a) const override { return {inverse_[a[0]]}; }
  const std::vector<Element>& generators() const override { return gens_; }
  std::string format(const Element& g) const override { return std::to_string(g[0]); }
  Element parse(std::string_view text) const override {
    auto v = parse_int64(text);
    if (v < 0 || v >= static_cast<std::int64_t>(table_.size())) throw DomainError("element out of range");
    return {v};
  }
  bool abelian() const override {
    for (std::size_t a = 0; a < table_.size(); ++a) {
      for (std::size_t b = 0; b < a; ++b) {
        if (table_[a][b] != table_[b][a]) return false;
      }
    }
    return true;
  }
  nlohmann::json descriptor() const override {
    if (cyclic_) return {{"preset", "finite-table"}, {"cyclic", *cyclic_}};
    return {{"preset", "finite-table"}, {"table", table_}, {"generators", gen_list_}};
  }

 private:
  std::vector<std::vector<int>> table_;
  std::vector<int> inverse_;
  std::vector<Element> gens_;
  std::vector<int> gen_list_;
  std::optional<int> cyclic_;
};

// ---------------------------------------------------------------- Z^n x| Z

using Matrix = std::vector<std::vector<std::int64_t>>;

Matrix mat_mul(const Matrix& a, const Matrix& b) {
  auto n = a.size();
  Matrix out(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (a[i][k] == 0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        std::int64_t prod = 0;
        if (__builtin_mul_overflow(a[i][k], b[k][j], &prod) ||
            __builtin_add_overflow(out[i][j], prod, &out[i][j])) {
          throw ResourceError("matrix power overflows 64-bit integers");
        }
      }
    }
  }
  return out;
}

Matrix identity_matrix(std::size_t n) {
  Matrix out(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) out[i][i] = 1;
  return out;
}

std::int64_t determinant(Matrix m) {
  // Bareiss fraction-free elimination
  auto n = m.size();
  std::int64_t sign = 1;
  std::int64_t prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m[k][k] == 0) {
      std::size_t p = k + 1;
      while (p < n && m[p][k] == 0) ++p;
      if (p == n) return 0;
      std::swap(m[k], m[p]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
      }
    }
    prev = m[k][k];
  }
  return sign * m[n - 1][n - 1];
}

Matrix adjugate_inverse(const Matrix& a) {
  auto n = a.size();
  std::int64_t det = determinant(a);
  if (det != 1 && det != -1) throw DomainError("semidirect product matrix must have determinant +-1");
  if (n == 1) return {{det}};
  Matrix inv(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Matrix minor;
      for (std::size_t r = 0; r < n; ++r) {
        if (r == i) continue;
        std::vector<std::int64_t> row;
        for (std::size_t c = 0; c < n; ++c) {
          if (c != j) row.push_back(a[r][c]);
        }
        minor.push_back(row);
      }
      std::int64_t cof = ((i + j) % 2 ? -1 : 1) * determinant(minor);
      inv[j][i] = cof * det;
    }
  }
  return inv;
}

class SemidirectGroup final : public GroupModel {
 public:
  explicit SemidirectGroup(Matrix a) : a_(std::move(a)) {
    n_ = a_.size();
    if (n_ == 0) throw DomainError("semidirect product needs a nonempty matrix");
    for (const auto& row : a_) {
      if (row.size() != n_) throw DomainError("semidirect product matrix is not square");
    }
    a_inv_ = adjugate_inverse(a_);
    for (std::size_t i = 0; i <= n_; ++i) {
      Element e(n_ + 1, 0);
      e[i] = 1;
      gens_.push_back(e);
      e[i] = -1;
      gens_.push_back(e);
    }
  }
  Element identity() const override { return Element(n_ + 1, 0); }
  Element multiply(const Element& x, const Element& y) const override {
    Matrix p = power(x[n_]);
    Element out(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      std::int64_t s = x[i];
      for (std::size_t j = 0; j < n_; ++j) s += p[i][j] * y[j];
      out[i] = s;
    }
    out[n_] = x[n_] + y[n_];
    return out;
  }
  Element inverse(const Element& x) const override {
    Matrix p = power(-x[n_]);
    Element out(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      std::int64_t s = 0;
      for (std::size_t j = 0; j < n_; ++j) s -= p[i][j] * x[j];
      out[i] = s;
    }
    out[n_] = -x[n_];
    return out;
  }
  const std::vector<Element>& generators() const override { return gens_; }
  std::string format(const Element& g) const override {
    std::string out = "(";
    for (std::size_t i = 0; i < n_; ++i) {
      if (i) out += ",";
      out += std::to_string(g[i]);
    }
    return out + ";" + std::to_string(g[n_]) + ")";
  }
  Element parse(std::string_view text) const override {
    auto v = parse_tuple(text);
    if (v.size() != n_ + 1) throw DomainError("expected " + std::to_string(n_ + 1) + " coordinates");
    return v;
  }
  nlohmann::json descriptor() const override { return {{"preset", "semidirect"}, {"matrix", a_}}; }

 private:
  Matrix power(std::int64_t t) const {
    Matrix base = t >= 0 ? a_ : a_inv_;
    auto e = static_cast<std::uint64_t>(t >= 0 ? t : -t);
    Matrix out = identity_matrix(n_);
    while (e) {
      if (e & 1) out = mat_mul(out, base);
      e >>= 1;
      if (e) base = mat_mul(base, base);
    }
    return out;
  }

  Matrix a_;
  Matrix a_inv_;
  std::size_t n_ = 0;
  std::vector<Element> gens_;
};

}  // namespace

GroupPtr lattice_group(int n) { return std::make_shared<LatticeGroup>(n); }

GroupPtr free_group(int rank) { return std::make_shared<FreeGroup>(rank); }

GroupPtr cyclic_group(int order) {
  if (order < 1) throw DomainError("cyclic group order must be positive");
  std::vector<std::vector<int>> table(order, std::vector<int>(order));
  for (int a = 0; a < order; ++a) {
    for (int b = 0; b < order; ++b) table[a][b] = (a + b) % order;
  }
  return std::make_shared<TableGroup>(std::move(table), std::vector<int>{order > 1 ? 1 : 0}, order);
}

GroupPtr table_group(std::vector<std::vector<int>> table, std::vector<int> gens) {
  return std::make_shared<TableGroup>(std::move(table), std::move(gens), std::nullopt);
}

GroupPtr semidirect_group(std::vector<std::vector<std::int64_t>> matrix) {
  return std::make_shared<SemidirectGroup>(std::move(matrix));
}

GroupPtr make_group(const nlohmann::json& d) {
  if (!d.is_object() || !d.contains("preset")) throw MalformedCertificate("group descriptor needs a \"preset\"");
  auto preset = d.at("preset").get<std::string>();
  if (preset == "Z") return lattice_group(1);
  if (preset == "Zn") return lattice_group(d.at("n").get<int>());
  if (preset == "free") return free_group(d.at("rank").get<int>());
  if (preset == "finite-table") {
    if (d.contains("cyclic")) return cyclic_group(d.at("cyclic").get<int>());
    return table_group(d.at("table").get<std::vector<std::vector<int>>>(),
                       d.at("generators").get<std::vector<int>>());
  }
  if (preset == "semidirect") return semidirect_group(d.at("matrix").get<Matrix>());
  throw MalformedCertificate("unknown group preset '" + preset + "'");
}

std::optional<std::string> check_group_laws(const GroupModel& model, const std::vector<Element>& sample,
                                            std::uint64_t seed, int trials) {
  const auto e = model.identity();
  for (const auto& s : model.generators()) {
    auto inv = model.inverse(s);
    if (std::find(model.generators().begin(), model.generators().end(), inv) == model.generators().end()) {
      return "generating set not closed under inversion at " + model.format(s);
    }
  }
  if (sample.empty()) return std::nullopt;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
  for (int t = 0; t < trials; ++t) {
    const auto& a = sample[pick(rng)];
    const auto& b = sample[pick(rng)];
    const auto& c = sample[pick(rng)];
    if (model.multiply(a, e) != a || model.multiply(e, a) != a) return "identity law fails at " + model.format(a);
    if (model.multiply(a, model.inverse(a)) != e) return "inverse law fails at " + model.format(a);
    if (model.multiply(model.multiply(a, b), c) != model.multiply(a, model.multiply(b, c))) {
      return "associativity fails at (" + model.format(a) + ", " + model.format(b) + ", " + model.format(c) + ")";
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- GroupBall

GroupBall::GroupBall(GroupPtr model, int radius, std::size_t cap) : model_(std::move(model)), radius_(radius) {
  if (radius < 0) throw DomainError("ball radius must be nonnegative");
  const auto& gens = model_->generators();
  if (gens.empty() && radius > 0) throw DomainError("group has no generators");
  bool closed_form = model_->word_length(model_->identity()).has_value();
  int target = radius;

  std::unordered_map<Element, std::int64_t, ElementHash> seen;
  std::vector<Element> shell{model_->identity()};
  seen.emplace(model_->identity(), 0);
  std::vector<std::vector<Element>> shells;
  shells.push_back(shell);
  bool exhausted = false;
  for (int r = 1;; ++r) {
    bool wide = r > radius;
    if (wide && (closed_form || exhausted)) break;
    if (wide) target = 2 * radius;
    if (r > target) break;
    std::vector<Element> next;
    for (const auto& g : shells.back()) {
      for (const auto& s : gens) {
        Element h = model_->multiply(g, s);
        if (seen.emplace(h, r).second) next.push_back(std::move(h));
      }
    }
    if (seen.size() > cap) {
      throw ResourceError("ball of radius " + std::to_string(r) + " exceeds the cap of " + std::to_string(cap) +
                          " elements");
    }
    if (next.empty()) {
      exhausted = true;
      break;
    }
    std::sort(next.begin(), next.end(), coordinate_less);
    shells.push_back(std::move(next));
  }
  complete_ = exhausted && shells.size() <= static_cast<std::size_t>(radius) + 1;

  std::size_t stored_shells = std::min<std::size_t>(shells.size(), static_cast<std::size_t>(radius) + 1);
  for (std::size_t r = 0; r < stored_shells; ++r) {
    for (auto& g : shells[r]) {
      index_.emplace(g, static_cast<Index>(elements_.size()));
      elements_.push_back(g);
      lengths_.push_back(static_cast<std::int64_t>(r));
    }
    shell_end_.push_back(elements_.size());
  }
  if (!closed_form && !complete_) {
    for (std::size_t r = stored_shells; r < shells.size(); ++r) {
      for (auto& g : shells[r]) wide_.emplace(std::move(g), static_cast<std::int64_t>(r));
    }
  }
}

std::optional<Index> GroupBall::find(const Element& g) const {
  auto it = index_.find(g);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t GroupBall::count_within(std::int64_t r) const {
  if (r < 0) return 0;
  if (r >= static_cast<std::int64_t>(shell_end_.size())) return elements_.size();
  return shell_end_[static_cast<std::size_t>(r)];
}

std::int64_t GroupBall::length_of(const Element& g) const {
  if (auto w = model_->word_length(g)) return *w;
  if (auto i = find(g)) return lengths_[*i];
  if (complete_) throw DomainError("element " + model_->format(g) + " is not in the group");
  auto it = wide_.find(g);
  if (it != wide_.end()) return it->second;
  throw TruncationError("word length of " + model_->format(g) + " exceeds twice the ball radius");
}

std::int64_t GroupBall::distance(Index a, Index b) const {
  if (a == b) return 0;
  if (auto d = model_->distance(elements_[a], elements_[b])) return *d;
  return length_of(model_->multiply(model_->inverse(elements_[a]), elements_[b]));
}

// ---------------------------------------------------------------- subgroups

namespace {

class PredicateSubgroup final : public Subgroup {
 public:
  PredicateSubgroup(std::function<bool(const Element&)> pred, nlohmann::json desc, bool normal)
      : pred_(std::move(pred)), desc_(std::move(desc)), normal_(normal) {}
  bool contains(const Element& g) const override { return pred_(g); }
  nlohmann::json descriptor() const override { return desc_; }
  bool declared_normal() const override { return normal_; }

 private:
  std::function<bool(const Element&)> pred_;
  nlohmann::json desc_;
  bool normal_;
};

}  // namespace

SubgroupPtr trivial_subgroup() {
  return std::make_shared<PredicateSubgroup>(
      [](const Element& g) { return std::all_of(g.begin(), g.end(), [](auto c) { return c == 0; }); },
      nlohmann::json{{"kind", "trivial"}}, true);
}

SubgroupPtr whole_group() {
  return std::make_shared<PredicateSubgroup>([](const Element&) { return true; }, nlohmann::json{{"kind", "whole"}},
                                             true);
}

SubgroupPtr coordinate_subgroup(std::vector<int> axes) {
  std::sort(axes.begin(), axes.end());
  auto pred = [axes](const Element& g) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] != 0 && !std::binary_search(axes.begin(), axes.end(), static_cast<int>(i))) return false;
    }
    return true;
  };
  return std::make_shared<PredicateSubgroup>(pred, nlohmann::json{{"kind", "coordinates"}, {"axes", axes}}, false);
}

SubgroupPtr multiples_subgroup(std::int64_t k) {
  if (k < 1) throw DomainError("multiples subgroup needs k >= 1");
  auto pred = [k](const Element& g) { return std::all_of(g.begin(), g.end(), [k](auto c) { return c % k == 0; }); };
  return std::make_shared<PredicateSubgroup>(pred, nlohmann::json{{"kind", "multiples"}, {"k", k}}, false);
}

SubgroupPtr element_subgroup(std::vector<Element> elements) {
  std::set<Element> members(elements.begin(), elements.end());
  auto desc = nlohmann::json{{"kind", "elements"}, {"elements", elements}};
  return std::make_shared<PredicateSubgroup>([members](const Element& g) { return members.count(g) > 0; }, desc,
                                             false);
}

SubgroupPtr predicate_subgroup(std::function<bool(const Element&)> pred, nlohmann::json descriptor) {
  return std::make_shared<PredicateSubgroup>(std::move(pred), std::move(descriptor), false);
}

SubgroupPtr make_subgroup(const GroupModel& model, const nlohmann::json& d) {
  if (!d.is_object() || !d.contains("kind")) throw MalformedCertificate("subgroup descriptor needs a \"kind\"");
  auto kind = d.at("kind").get<std::string>();
  if (kind == "trivial") return trivial_subgroup();
  if (kind == "whole") return whole_group();
  if (kind == "coordinates") return coordinate_subgroup(d.at("axes").get<std::vector<int>>());
  if (kind == "multiples") return multiples_subgroup(d.at("k").get<std::int64_t>());
  if (kind == "elements") {
    std::vector<Element> elems;
    for (const auto& e : d.at("elements")) {
      elems.push_back(e.is_string() ? model.parse(e.get<std::string>()) : e.get<Element>());
    }
    return element_subgroup(std::move(elems));
  }
  throw MalformedCertificate("unknown subgroup kind '" + kind + "'");
}

void check_subgroup(const GroupBall& ball, const Subgroup& h, std::uint64_t seed, int trials) {
  const auto& model = ball.model();
  if (!h.contains(model.identity())) throw InvalidSubgroup("identity is not a member");
  std::vector<Index> members;
  for (Index i = 0; i < ball.size(); ++i) {
    if (h.contains(ball.element(i))) members.push_back(i);
  }
  auto check_pair = [&](Index a, Index b) {
    const auto& x = ball.element(a);
    const auto& y = ball.element(b);
    if (!h.contains(model.multiply(x, model.inverse(y)))) {
      throw InvalidSubgroup("not closed: " + model.format(x) + " * " + model.format(y) + "^-1 is not a member");
    }
  };
  if (members.size() <= 64) {
    for (auto a : members) {
      for (auto b : members) check_pair(a, b);
    }
    return;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
  for (int t = 0; t < trials; ++t) check_pair(members[pick(rng)], members[pick(rng)]);
}

bool check_normal(const GroupBall& ball, const Subgroup& h, std::uint64_t seed, int trials) {
  const auto& model = ball.model();
  if (model.abelian() || h.declared_normal()) return true;
  std::vector<Index> members;
  for (Index i = 0; i < ball.size(); ++i) {
    if (h.contains(ball.element(i))) members.push_back(i);
  }
  if (members.empty()) return true;
  auto conj_ok = [&](Index g, Index m) {
    const auto& x = ball.element(g);
    return h.contains(model.multiply(model.multiply(x, ball.element(m)), model.inverse(x)));
  };
  if (ball.size() * members.size() <= 20000) {
    for (Index g = 0; g < ball.size(); ++g) {
      for (auto m : members) {
        if (!conj_ok(g, m)) return false;
      }
    }
    return true;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_g(0, ball.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_m(0, members.size() - 1);
  for (int t = 0; t < trials; ++t) {
    if (!conj_ok(static_cast<Index>(pick_g(rng)), members[pick_m(rng)])) return false;
  }
  return true;
}

}  // namespace coarse
