#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "affwords/common.hpp"
#include "affwords/schema.hpp"

namespace affwords {

using ParentLists = std::vector<std::vector<std::size_t>>;

// Discrete Bayesian network. Each CPT is stored row-major: one row per parent
// configuration (mixed radix over the parent list, last parent fastest), one
// column per value of the child.
class BayesNet {
 public:
  static constexpr double row_tolerance = 1e-12;

  BayesNet() = default;

  // Validates the parent graph and fills every CPT uniformly.
  static BayesNet build(WorldSchema schema, ParentLists parents) {
    const std::size_t n = schema.size();
    if (parents.size() != n)
      fail(ErrorKind::invalid_argument,
           "parent lists: expected " + std::to_string(n) + " entries, got " +
               std::to_string(parents.size()));
    for (std::size_t v = 0; v < n; ++v) {
      auto& ps = parents[v];
      for (auto p : ps) {
        if (p >= n)
          fail(ErrorKind::invalid_argument,
               "parent index " + std::to_string(p) + " out of range for '" +
                   schema.var(v).name + "'");
        if (p == v)
          fail(ErrorKind::cycle,
               "variable '" + schema.var(v).name + "' is its own parent");
      }
      auto sorted = ps;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        fail(ErrorKind::invalid_argument,
             "duplicate parent for '" + schema.var(v).name + "'");
    }

    BayesNet net;
    net.schema_ = std::move(schema);
    net.parents_ = std::move(parents);
    net.order_ = topological_order(net.schema_, net.parents_);
    net.cpts_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
      const auto k = net.schema_.arity(v);
      net.cpts_[v].assign(net.parent_configs(v) * k, 1.0 / double(k));
    }
    return net;
  }

  const WorldSchema& schema() const { return schema_; }
  std::size_t size() const { return schema_.size(); }
  const ParentLists& parents() const { return parents_; }
  const std::vector<std::size_t>& parents(std::size_t v) const {
    return parents_.at(v);
  }
  // Parents always precede children in this order.
  const std::vector<std::size_t>& topological_order() const { return order_; }

  std::size_t parent_configs(std::size_t v) const {
    std::size_t c = 1;
    for (auto p : parents_.at(v)) c *= schema_.arity(p);
    return c;
  }

  // Parent configuration index of `v` under a full assignment.
  std::size_t config_of(std::size_t v, std::span<const std::size_t> values) const {
    std::size_t c = 0;
    for (auto p : parents_[v]) c = c * schema_.arity(p) + values[p];
    return c;
  }

  // Parent values for a configuration index.
  std::vector<std::size_t> config_values(std::size_t v, std::size_t config) const {
    const auto& ps = parents_.at(v);
    std::vector<std::size_t> out(ps.size());
    for (std::size_t i = ps.size(); i-- > 0;) {
      const auto k = schema_.arity(ps[i]);
      out[i] = config % k;
      config /= k;
    }
    return out;
  }

  std::span<const double> row(std::size_t v, std::size_t config) const {
    const auto k = schema_.arity(v);
    return std::span<const double>(cpts_.at(v)).subspan(config * k, k);
  }

  double prob(std::size_t v, std::size_t config, std::size_t value) const {
    return cpts_[v][config * schema_.arity(v) + value];
  }

  const std::vector<double>& cpt(std::size_t v) const { return cpts_.at(v); }

  void set_row(std::size_t v, std::size_t config, std::span<const double> probs) {
    const auto k = schema_.arity(v);
    if (config >= parent_configs(v) || probs.size() != k)
      fail(ErrorKind::invalid_argument,
           "CPT row shape mismatch for '" + schema_.var(v).name + "'");
    check_row(v, probs);
    std::copy(probs.begin(), probs.end(), cpts_[v].begin() + config * k);
  }

  void set_cpt(std::size_t v, std::vector<double> table) {
    const auto k = schema_.arity(v);
    if (table.size() != parent_configs(v) * k)
      fail(ErrorKind::invalid_argument,
           "CPT size mismatch for '" + schema_.var(v).name + "'");
    for (std::size_t c = 0; c < parent_configs(v); ++c)
      check_row(v, std::span<const double>(table).subspan(c * k, k));
    cpts_[v] = std::move(table);
  }

  static std::vector<std::size_t> topological_order(const WorldSchema& schema,
                                                    const ParentLists& parents) {
    // Kahn's algorithm, smallest ready index first.
    const std::size_t n = parents.size();
    std::vector<std::size_t> indeg(n, 0);
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t v = 0; v < n; ++v)
      for (auto p : parents[v]) {
        children[p].push_back(v);
        ++indeg[v];
      }
    std::vector<std::size_t> order;
    std::vector<bool> done(n, false);
    while (order.size() < n) {
      std::size_t next = n;
      for (std::size_t v = 0; v < n; ++v)
        if (!done[v] && indeg[v] == 0) {
          next = v;
          break;
        }
      if (next == n) {
        std::string members;
        for (std::size_t v = 0; v < n; ++v)
          if (!done[v]) members += (members.empty() ? "" : ", ") + schema.var(v).name;
        fail(ErrorKind::cycle, "cycle detected among: " + members);
      }
      done[next] = true;
      order.push_back(next);
      for (auto c : children[next]) --indeg[c];
    }
    return order;
  }

 private:
  void check_row(std::size_t v, std::span<const double> probs) const {
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0) || !std::isfinite(p))
        fail(ErrorKind::invalid_argument,
             "negative or non-finite CPT entry for '" + schema_.var(v).name + "'");
      sum += p;
    }
    if (std::abs(sum - 1.0) > row_tolerance)
      fail(ErrorKind::invalid_argument,
           "CPT row for '" + schema_.var(v).name + "' sums to " +
               format_double(sum, 17));
  }

  WorldSchema schema_;
  ParentLists parents_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<double>> cpts_;
};

// Lookup helper for building parent lists by name.
inline ParentLists parents_by_name(
    const WorldSchema& schema,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& edges) {
  ParentLists parents(schema.size());
  for (const auto& [child, ps] : edges) {
    auto& list = parents[schema.index_of(child)];
    for (const auto& p : ps) list.push_back(schema.index_of(p));
  }
  return parents;
}

// Smoothed maximum-likelihood CPTs:
//   P(x | pa) = (count(x, pa) + alpha) / (count(pa) + alpha * arity).
// With alpha = 0 every parent configuration must be observed.
inline BayesNet fit_parameters(const BayesNet& net, const Dataset& data,
                               double alpha = 1.0) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    fail(ErrorKind::invalid_argument, "alpha must be a finite non-negative number");
  const auto& schema = net.schema();
  validate_dataset(schema, data);

  BayesNet out = net;
  for (std::size_t v = 0; v < schema.size(); ++v) {
    const auto k = schema.arity(v);
    const auto configs = net.parent_configs(v);
    std::vector<double> counts(configs * k, 0.0);
    for (const auto& row : data.rows)
      counts[net.config_of(v, row) * k + row[v]] += 1.0;

    std::vector<double> table(configs * k);
    for (std::size_t c = 0; c < configs; ++c) {
      double total = 0.0;
      for (std::size_t x = 0; x < k; ++x) total += counts[c * k + x];
      const double denom = total + alpha * double(k);
      if (denom <= 0.0) {
        std::string cfg;
        const auto vals = net.config_values(v, c);
        for (std::size_t i = 0; i < vals.size(); ++i) {
          const auto p = net.parents(v)[i];
          cfg += (i ? "," : "") + schema.var(p).name + "=" +
                 schema.var(p).labels[vals[i]];
        }
        fail(ErrorKind::invalid_argument,
             "unobserved parent configuration {" + cfg + "} for '" +
                 schema.var(v).name + "' with alpha = 0");
      }
      for (std::size_t x = 0; x < k; ++x)
        table[c * k + x] = (counts[c * k + x] + alpha) / denom;
    }
    out.set_cpt(v, std::move(table));
  }
  return out;
}

}  // namespace affwords
