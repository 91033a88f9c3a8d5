#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace foamck {

struct Index {
  std::vector<std::int64_t> key;

  bool operator==(const Index&) const = default;
  auto operator<=>(const Index&) const = default;
  std::string str() const;
};

/// Right directed partial order. element(k) walks a generating sequence of the
/// universe: every element is reachable from it through joins.
class IndexPoset {
 public:
  virtual ~IndexPoset() = default;
  virtual bool leq(const Index& a, const Index& b) const = 0;
  virtual Index join(const Index& a, const Index& b) const = 0;
  virtual Index element(std::size_t k) const = 0;
  /// Number of elements when finite and fully enumerated by element().
  virtual std::optional<std::size_t> size() const = 0;
  virtual std::string name() const = 0;
};

using PosetPtr = std::shared_ptr<const IndexPoset>;

/// (N, <=).
class NaturalPoset final : public IndexPoset {
 public:
  bool leq(const Index& a, const Index& b) const override { return a.key[0] <= b.key[0]; }
  Index join(const Index& a, const Index& b) const override;
  Index element(std::size_t k) const override { return Index{{static_cast<std::int64_t>(k)}}; }
  std::optional<std::size_t> size() const override { return std::nullopt; }
  std::string name() const override { return "N"; }
};

/// Nonvoid finite subsets of an indexed point list, ordered by inclusion.
/// With count <= 20 every subset is enumerated (as bitmasks 1..2^count-1);
/// otherwise (or for an unbounded list) element() alternates prefixes
/// {0..j} and singletons {j}.
class FiniteSubsetPoset final : public IndexPoset {
 public:
  explicit FiniteSubsetPoset(std::optional<std::size_t> count) : count_(count) {}
  bool leq(const Index& a, const Index& b) const override;
  Index join(const Index& a, const Index& b) const override;
  Index element(std::size_t k) const override;
  std::optional<std::size_t> size() const override;
  std::string name() const override { return "finite-subsets"; }
  std::optional<std::size_t> count() const { return count_; }

 private:
  std::optional<std::size_t> count_;
};

/// Pairs (A, level) with A a nonvoid finite set of point indices. Order is
/// A subset of B together with level(A) <= level(B); join takes the union and
/// the larger level. Elements 2j are the chain (prefix of size j+1, level j),
/// elements 2j+1 are ({j}, floor(j/2)). Indices wrap modulo a finite count.
class ExampleOnePoset final : public IndexPoset {
 public:
  explicit ExampleOnePoset(std::optional<std::size_t> count) : count_(count) {}
  bool leq(const Index& a, const Index& b) const override;
  Index join(const Index& a, const Index& b) const override;
  Index element(std::size_t k) const override;
  std::optional<std::size_t> size() const override { return std::nullopt; }
  std::string name() const override { return "example-one"; }

  static std::int64_t level(const Index& i) { return i.key[0]; }
  static std::vector<std::int64_t> members(const Index& i) { return {i.key.begin() + 1, i.key.end()}; }
  static Index make(std::int64_t level, std::vector<std::int64_t> members);

 private:
  std::optional<std::size_t> count_;
};

/// Sorted-set helpers on index keys.
bool is_subset(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b);
std::vector<std::int64_t> set_union(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b);

}  // namespace foamck
