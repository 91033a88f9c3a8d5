#include "foamck/poset.hpp"

#include <algorithm>

#include "foamck/error.hpp"

namespace foamck {

std::string Index::str() const {
  std::string out = "(";
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(key[i]);
  }
  return out + ")";
}

bool is_subset(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::vector<std::int64_t> set_union(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  std::vector<std::int64_t> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Index NaturalPoset::join(const Index& a, const Index& b) const {
  return Index{{std::max(a.key[0], b.key[0])}};
}

bool FiniteSubsetPoset::leq(const Index& a, const Index& b) const { return is_subset(a.key, b.key); }

Index FiniteSubsetPoset::join(const Index& a, const Index& b) const { return Index{set_union(a.key, b.key)}; }

std::optional<std::size_t> FiniteSubsetPoset::size() const {
  if (count_ && *count_ <= 20) return (std::size_t{1} << *count_) - 1;
  return std::nullopt;
}

Index FiniteSubsetPoset::element(std::size_t k) const {
  if (count_ && *count_ == 0) throw PreconditionError("finite-subset poset over an empty set");
  if (auto n = size()) {
    if (k >= *n) throw PreconditionError("poset element index out of range");
    Index out;
    const std::size_t mask = k + 1;
    for (std::size_t i = 0; i < *count_; ++i) {
      if (mask & (std::size_t{1} << i)) out.key.push_back(static_cast<std::int64_t>(i));
    }
    return out;
  }
  const std::size_t j = k / 2;
  const std::size_t wrap = count_ ? *count_ : ~std::size_t{0};
  Index out;
  if (k % 2 == 0) {
    for (std::size_t i = 0; i <= std::min(j, wrap - 1); ++i) out.key.push_back(static_cast<std::int64_t>(i));
  } else {
    out.key.push_back(static_cast<std::int64_t>(j % wrap));
  }
  return out;
}

Index ExampleOnePoset::make(std::int64_t level, std::vector<std::int64_t> members) {
  Index out;
  out.key.reserve(members.size() + 1);
  out.key.push_back(level);
  out.key.insert(out.key.end(), members.begin(), members.end());
  return out;
}

bool ExampleOnePoset::leq(const Index& a, const Index& b) const {
  if (level(a) > level(b)) return false;
  return std::includes(b.key.begin() + 1, b.key.end(), a.key.begin() + 1, a.key.end());
}

Index ExampleOnePoset::join(const Index& a, const Index& b) const {
  Index out;
  out.key.push_back(std::max(level(a), level(b)));
  std::set_union(a.key.begin() + 1, a.key.end(), b.key.begin() + 1, b.key.end(), std::back_inserter(out.key));
  return out;
}

Index ExampleOnePoset::element(std::size_t k) const {
  if (count_ && *count_ == 0) throw PreconditionError("example-one poset over an empty set");
  const std::size_t j = k / 2;
  const std::size_t wrap = count_ ? *count_ : ~std::size_t{0};
  std::vector<std::int64_t> members;
  if (k % 2 == 0) {
    for (std::size_t i = 0; i <= std::min(j, wrap - 1); ++i) members.push_back(static_cast<std::int64_t>(i));
    return make(static_cast<std::int64_t>(j), std::move(members));
  }
  members.push_back(static_cast<std::int64_t>(j % wrap));
  return make(static_cast<std::int64_t>(j / 2), std::move(members));
}

}  // namespace foamck
