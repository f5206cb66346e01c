#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "affwords/bayes_net.hpp"
#include "affwords/common.hpp"
#include "affwords/schema.hpp"

namespace affwords {

// Joint distribution over an ordered list of variables, row-major with the
// last variable varying fastest.
struct Distribution {
  std::vector<std::size_t> vars;
  std::vector<std::size_t> card;
  std::vector<double> probs;

  std::size_t index_of(std::span<const std::size_t> values) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < vars.size(); ++i) idx = idx * card[i] + values[i];
    return idx;
  }

  std::vector<std::size_t> values_of(std::size_t idx) const {
    std::vector<std::size_t> out(vars.size());
    for (std::size_t i = vars.size(); i-- > 0;) {
      out[i] = idx % card[i];
      idx /= card[i];
    }
    return out;
  }

  double at(std::span<const std::size_t> values) const {
    return probs[index_of(values)];
  }

  std::size_t position_of(std::size_t var) const {
    auto it = std::find(vars.begin(), vars.end(), var);
    if (it == vars.end())
      fail(ErrorKind::invalid_argument, "variable not in distribution");
    return std::size_t(it - vars.begin());
  }

  std::vector<double> marginal(std::size_t var) const {
    const auto pos = position_of(var);
    std::vector<double> out(card[pos], 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) out[values_of(i)[pos]] += probs[i];
    return out;
  }

  double sum() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }
};

// Dense factor over a sorted variable list, last variable fastest.
struct Factor {
  std::vector<std::size_t> vars;
  std::vector<std::size_t> card;
  std::vector<double> values;

  bool contains(std::size_t v) const {
    return std::binary_search(vars.begin(), vars.end(), v);
  }
};

namespace detail {

inline std::vector<std::size_t> strides_for(const std::vector<std::size_t>& card) {
  std::vector<std::size_t> s(card.size(), 1);
  for (std::size_t i = card.size(); i-- > 1;) s[i - 1] = s[i] * card[i];
  return s;
}

inline std::size_t volume(const std::vector<std::size_t>& card) {
  std::size_t n = 1;
  for (auto c : card) n *= c;
  return n;
}

// Advances a mixed-radix counter; returns false after the last state.
inline bool next_state(std::vector<std::size_t>& state,
                       const std::vector<std::size_t>& card) {
  for (std::size_t i = state.size(); i-- > 0;) {
    if (++state[i] < card[i]) return true;
    state[i] = 0;
  }
  return false;
}

inline Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                 std::back_inserter(out.vars));
  std::vector<std::size_t> stride_a(out.vars.size(), 0), stride_b(out.vars.size(), 0);
  const auto sa = strides_for(a.card), sb = strides_for(b.card);
  for (std::size_t i = 0; i < out.vars.size(); ++i) {
    const auto v = out.vars[i];
    auto ia = std::lower_bound(a.vars.begin(), a.vars.end(), v);
    auto ib = std::lower_bound(b.vars.begin(), b.vars.end(), v);
    if (ia != a.vars.end() && *ia == v) {
      const auto k = std::size_t(ia - a.vars.begin());
      out.card.push_back(a.card[k]);
      stride_a[i] = sa[k];
    }
    if (ib != b.vars.end() && *ib == v) {
      const auto k = std::size_t(ib - b.vars.begin());
      if (out.card.size() == i) out.card.push_back(b.card[k]);
      stride_b[i] = sb[k];
    }
  }
  out.values.resize(volume(out.card));
  std::vector<std::size_t> state(out.vars.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t idx = 0; idx < out.values.size(); ++idx) {
    out.values[idx] = a.values[ia] * b.values[ib];
    // Increment state and the two source offsets together.
    for (std::size_t i = state.size(); i-- > 0;) {
      if (++state[i] < out.card[i]) {
        ia += stride_a[i];
        ib += stride_b[i];
        break;
      }
      ia -= stride_a[i] * (out.card[i] - 1);
      ib -= stride_b[i] * (out.card[i] - 1);
      state[i] = 0;
    }
  }
  return out;
}

inline Factor sum_out(const Factor& f, std::size_t var) {
  const auto pos = std::size_t(
      std::lower_bound(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
  Factor out;
  out.vars = f.vars;
  out.card = f.card;
  out.vars.erase(out.vars.begin() + pos);
  out.card.erase(out.card.begin() + pos);
  out.values.assign(volume(out.card), 0.0);
  const auto strides = strides_for(f.card);
  const auto inner = strides[pos];
  const auto k = f.card[pos];
  const auto outer = f.values.size() / (inner * k);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t x = 0; x < k; ++x)
      for (std::size_t i = 0; i < inner; ++i)
        out.values[o * inner + i] += f.values[(o * k + x) * inner + i];
  return out;
}

// CPT of `v` as a factor, with observed variables sliced away.
inline Factor cpt_factor(const BayesNet& net, std::size_t v, const Evidence& obs) {
  const auto& schema = net.schema();
  std::vector<std::size_t> family = net.parents(v);
  family.push_back(v);
  Factor f;
  for (auto u : family)
    if (!obs.count(u)) f.vars.push_back(u);
  std::sort(f.vars.begin(), f.vars.end());
  for (auto u : f.vars) f.card.push_back(schema.arity(u));
  f.values.resize(volume(f.card));

  std::vector<std::size_t> full(schema.size(), 0);
  for (auto [u, x] : obs) full[u] = x;
  std::vector<std::size_t> state(f.vars.size(), 0);
  std::size_t idx = 0;
  do {
    for (std::size_t i = 0; i < f.vars.size(); ++i) full[f.vars[i]] = state[i];
    f.values[idx++] = net.prob(v, net.config_of(v, full), full[v]);
  } while (next_state(state, f.card));
  return f;
}

inline void normalize_by_max(Factor& f) {
  double hi = 0.0;
  for (double x : f.values) hi = std::max(hi, x);
  if (hi > 0.0)
    for (double& x : f.values) x /= hi;
}

inline void validate_query(const BayesNet& net, std::span<const std::size_t> infer,
                           const Evidence& obs) {
  const auto& schema = net.schema();
  if (infer.empty()) fail(ErrorKind::invalid_argument, "no inference variables");
  validate_evidence(schema, obs);
  std::vector<std::size_t> sorted(infer.begin(), infer.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    fail(ErrorKind::invalid_argument, "inference variable listed twice");
  for (auto v : infer) {
    if (v >= schema.size())
      fail(ErrorKind::invalid_argument, "inference variable index out of range");
    if (obs.count(v))
      fail(ErrorKind::invalid_argument, "variable '" + schema.var(v).name +
                                            "' is both inferred and observed");
  }
}

// Arrange a factor whose scope equals the inference set into a distribution
// in the caller's variable order, then normalize.
inline Distribution to_distribution(const Factor& f, const BayesNet& net,
                                    std::span<const std::size_t> infer) {
  Distribution d;
  d.vars.assign(infer.begin(), infer.end());
  for (auto v : d.vars) d.card.push_back(net.schema().arity(v));
  d.probs.assign(volume(d.card), 0.0);
  const auto fs = strides_for(f.card);
  std::vector<std::size_t> stride(d.vars.size());
  for (std::size_t i = 0; i < d.vars.size(); ++i) {
    const auto k = std::size_t(
        std::lower_bound(f.vars.begin(), f.vars.end(), d.vars[i]) - f.vars.begin());
    stride[i] = fs[k];
  }
  std::vector<std::size_t> state(d.vars.size(), 0);
  std::size_t idx = 0;
  do {
    std::size_t src = 0;
    for (std::size_t i = 0; i < state.size(); ++i) src += state[i] * stride[i];
    d.probs[idx++] = f.values[src];
  } while (next_state(state, d.card));

  double total = d.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    fail(ErrorKind::impossible_evidence, "impossible evidence: zero probability");
  for (double& p : d.probs) p /= total;
  return d;
}

}  // namespace detail

// Exact posterior P(infer | obs) by variable elimination. The elimination
// order is min-degree on the interaction graph, ties broken by schema index.
inline Distribution query(const BayesNet& net, std::span<const std::size_t> infer,
                          const Evidence& obs = {}) {
  detail::validate_query(net, infer, obs);
  const auto n = net.size();

  std::vector<Factor> factors;
  factors.reserve(n);
  for (std::size_t v = 0; v < n; ++v) factors.push_back(detail::cpt_factor(net, v, obs));

  std::vector<bool> keep(n, false);
  for (auto v : infer) keep[v] = true;
  std::vector<std::size_t> pending;
  for (std::size_t v = 0; v < n; ++v)
    if (!keep[v] && !obs.count(v)) pending.push_back(v);

  std::vector<bool> seen(n, false);
  std::vector<std::size_t> touched;
  while (!pending.empty()) {
    std::size_t best = 0, best_degree = SIZE_MAX;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const auto v = pending[i];
      std::size_t degree = 0;
      touched.clear();
      for (const auto& f : factors) {
        if (!f.contains(v)) continue;
        for (auto u : f.vars)
          if (u != v && !seen[u]) {
            seen[u] = true;
            touched.push_back(u);
            ++degree;
          }
      }
      for (auto u : touched) seen[u] = false;
      if (degree < best_degree) {
        best_degree = degree;
        best = i;
      }
    }
    const auto v = pending[best];
    pending.erase(pending.begin() + best);

    Factor prod{{}, {}, {1.0}};
    std::vector<Factor> rest;
    rest.reserve(factors.size());
    for (auto& f : factors) {
      if (f.contains(v))
        prod = detail::multiply(prod, f);
      else
        rest.push_back(std::move(f));
    }
    Factor reduced = detail::sum_out(prod, v);
    detail::normalize_by_max(reduced);
    rest.push_back(std::move(reduced));
    factors = std::move(rest);
  }

  Factor result{{}, {}, {1.0}};
  for (const auto& f : factors) {
    result = detail::multiply(result, f);
    detail::normalize_by_max(result);
  }
  return detail::to_distribution(result, net, infer);
}

inline Distribution query(const BayesNet& net, std::initializer_list<std::size_t> infer,
                          const Evidence& obs = {}) {
  const std::vector<std::size_t> v(infer);
  return query(net, std::span<const std::size_t>(v), obs);
}

inline constexpr std::uint64_t default_enumeration_cap = std::uint64_t(1) << 24;

// Reference answer by brute-force summation over the joint. Variables that
// are neither inferred, observed, nor ancestors of one are dropped first:
// their CPTs sum to one, so the result is unchanged. The remaining free
// state space must not exceed `cap`.
inline Distribution joint_enumerate(const BayesNet& net,
                                    std::span<const std::size_t> infer,
                                    const Evidence& obs = {},
                                    std::uint64_t cap = default_enumeration_cap) {
  detail::validate_query(net, infer, obs);
  const auto& schema = net.schema();
  const auto n = net.size();

  std::vector<bool> relevant(n, false);
  std::vector<std::size_t> stack(infer.begin(), infer.end());
  for (auto [v, x] : obs) stack.push_back(v);
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (relevant[v]) continue;
    relevant[v] = true;
    for (auto p : net.parents(v)) stack.push_back(p);
  }

  std::vector<std::size_t> free_vars, free_card;
  std::vector<std::size_t> members;
  long double states = 1.0L;
  for (std::size_t v = 0; v < n; ++v) {
    if (!relevant[v]) continue;
    members.push_back(v);
    if (!obs.count(v)) {
      free_vars.push_back(v);
      free_card.push_back(schema.arity(v));
      states *= schema.arity(v);
    }
  }
  if (states > static_cast<long double>(cap))
    fail(ErrorKind::invalid_argument,
         "joint state space of " + format_double(double(states), 6) +
             " exceeds enumeration cap " + std::to_string(cap));

  Distribution d;
  d.vars.assign(infer.begin(), infer.end());
  for (auto v : d.vars) d.card.push_back(schema.arity(v));
  d.probs.assign(detail::volume(d.card), 0.0);

  std::vector<std::size_t> full(n, 0);
  for (auto [v, x] : obs) full[v] = x;
  std::vector<std::size_t> state(free_vars.size(), 0);
  std::vector<std::size_t> key(d.vars.size());
  do {
    for (std::size_t i = 0; i < free_vars.size(); ++i) full[free_vars[i]] = state[i];
    double p = 1.0;
    for (auto v : members) {
      p *= net.prob(v, net.config_of(v, full), full[v]);
      if (p == 0.0) break;
    }
    for (std::size_t i = 0; i < d.vars.size(); ++i) key[i] = full[d.vars[i]];
    d.probs[d.index_of(key)] += p;
  } while (detail::next_state(state, free_card));

  const double total = d.sum();
  if (!(total > 0.0))
    fail(ErrorKind::impossible_evidence, "impossible evidence: zero probability");
  for (double& p : d.probs) p /= total;
  return d;
}

inline Distribution joint_enumerate(const BayesNet& net,
                                    std::initializer_list<std::size_t> infer,
                                    const Evidence& obs = {},
                                    std::uint64_t cap = default_enumeration_cap) {
  const std::vector<std::size_t> v(infer);
  return joint_enumerate(net, std::span<const std::size_t>(v), obs, cap);
}

}  // namespace affwords
