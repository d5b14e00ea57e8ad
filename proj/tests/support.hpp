#pragma once

// Shared fixtures for the test binaries: random valid networks, random tasks
// and an independent rebuild of the drift matrix from per-node coefficients.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "oqnet/matkernel.hpp"
#include "oqnet/memmetrics.hpp"
#include "oqnet/netmodel.hpp"

namespace oqnet::testing {

using Rng = std::mt19937_64;

inline Mat random_mat(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Mat out(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, j) = dist(rng);
  return out;
}

inline Mat random_sym(Rng& rng, std::size_t n, double scale = 1.0) {
  return sym(random_mat(rng, n, n, scale));
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double frac(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Rotation inside each conjugate pair keeps D D^T = I and D J D^T = J.
inline Mat pair_rotation(Rng& rng) {
  const double a = std::uniform_real_distribution<double>(0.0, 6.283185307179586)(rng);
  return Mat{{std::cos(a), std::sin(a)}, {-std::sin(a), std::cos(a)}};
}

struct NetworkOptions {
  std::size_t min_nodes = 1;
  std::size_t max_nodes = 5;
  std::size_t min_edges = 0;
  std::size_t max_edges = 10;
  double link_prob = 0.4;
  bool allow_fieldless = true;
  bool rotate_channels = true;
  double scale = 0.5;
};

inline NetworkSpec random_network(Rng& rng, const NetworkOptions& opt = {}) {
  NetworkSpec spec;
  const std::size_t count = pick(rng, opt.min_nodes, opt.max_nodes);
  for (std::size_t i = 0; i < count; ++i) {
    NodeSpec node;
    node.id = "q" + std::to_string(i);
    node.n = 2 * pick(rng, 1, 2);
    node.m = 2 * pick(rng, opt.allow_fieldless ? 0 : 1, 2);
    node.R = random_sym(rng, node.n, opt.scale);
    node.M = random_mat(rng, node.m, node.n, opt.scale);
    spec.nodes.push_back(node);
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t j = 0; j < count; ++j)
    for (std::size_t k = j + 1; k < count; ++k) pairs.emplace_back(j, k);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const std::size_t hi = std::min(opt.max_edges, pairs.size());
  const std::size_t edges = pick(rng, std::min(opt.min_edges, hi), hi);
  for (std::size_t e = 0; e < edges; ++e) {
    auto [j, k] = pairs[e];
    if (frac(rng) < 0.5) std::swap(j, k);  // exercise orientation normalization
    spec.energy_edges.push_back({spec.nodes[j].id, spec.nodes[k].id,
                                 random_mat(rng, spec.nodes[j].n, spec.nodes[k].n, opt.scale)});
  }

  // Each sender splits its conjugate channel pairs among distinct receivers.
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t m = spec.nodes[j].m;
    std::vector<std::size_t> free_pairs(m / 2);
    std::iota(free_pairs.begin(), free_pairs.end(), 0);
    std::shuffle(free_pairs.begin(), free_pairs.end(), rng);
    for (std::size_t k = 0; k < count && !free_pairs.empty(); ++k) {
      if (k == j || frac(rng) >= opt.link_prob) continue;
      const std::size_t take = pick(rng, 1, free_pairs.size());
      FieldLink link;
      link.from = spec.nodes[j].id;
      link.to = spec.nodes[k].id;
      link.r = 2 * take;
      link.D = Mat(link.r, m);
      for (std::size_t t = 0; t < take; ++t) {
        const std::size_t p = free_pairs.back();
        free_pairs.pop_back();
        const Mat rot = opt.rotate_channels ? pair_rotation(rng) : Mat::identity(2);
        link.D.set_block(2 * t, 2 * p, rot);
      }
      link.N = random_mat(rng, link.r, spec.nodes[k].n, opt.scale);
      spec.field_links.push_back(link);
    }
  }
  return spec;
}

/// F with full row rank and P = 1/2 I + L L^T, which keeps P + i Theta >= 0.
inline MemoryTask random_task(Rng& rng, std::size_t n, std::size_t s = 0) {
  MemoryTask task;
  if (s == 0) s = pick(rng, 1, n);
  task.F = random_mat(rng, s, n);
  const Mat l = random_mat(rng, n, n, 0.3);
  task.P = vacuum_covariance(n) + l * transpose(l);
  task.epsilons = {0.01};
  return task;
}

inline MemoryTask full_task(std::size_t n) {
  return MemoryTask{Mat::identity(n), vacuum_covariance(n), {0.01}};
}

/// Drift matrix rebuilt from per-node coefficients only: diagonal blocks A_j,
/// off-diagonal blocks A_jk plus E_jk C_kj for every field link k -> j.
inline Mat rebuild_drift(const NetworkSpec& spec) {
  std::vector<std::size_t> offset;
  std::size_t n = 0;
  for (const auto& node : spec.nodes) {
    offset.push_back(n);
    n += node.n;
  }
  std::vector<ComponentQsde> parts;
  for (const auto& node : spec.nodes) parts.push_back(component_qsde(spec, node.id));
  Mat a(n, n);
  for (std::size_t j = 0; j < spec.nodes.size(); ++j) {
    a.add_block(offset[j], offset[j], parts[j].A_self);
    for (std::size_t k = 0; k < spec.nodes.size(); ++k) {
      if (k == j) continue;
      const std::string& kid = spec.nodes[k].id;
      if (auto it = parts[j].A_energy.find(kid); it != parts[j].A_energy.end()) {
        a.add_block(offset[j], offset[k], it->second);
      }
      if (auto it = parts[j].E_in.find(kid); it != parts[j].E_in.end()) {
        a.add_block(offset[j], offset[k], it->second * parts[k].C_out.at(spec.nodes[j].id));
      }
    }
  }
  return a;
}

/// The single node n = m = 2, R = 0, M = I.
inline NetworkSpec canonical_node() {
  NetworkSpec spec;
  spec.nodes.push_back({"a", 2, 2, Mat(2, 2), Mat::identity(2)});
  return spec;
}

/// Node "a" has no field and no incoming links; "b" is open to its field and
/// exchanges energy with "a".
inline NetworkSpec fieldless_pair(Rng& rng, double scale = 0.5) {
  NetworkSpec spec;
  spec.nodes.push_back({"a", 2, 0, random_sym(rng, 2, scale), Mat(0, 2)});
  spec.nodes.push_back({"b", 2, 2, random_sym(rng, 2, scale), random_mat(rng, 2, 2, 1.0)});
  spec.energy_edges.push_back({"a", "b", random_mat(rng, 2, 2, scale)});
  return spec;
}

inline double rel_diff(const Mat& a, const Mat& b) {
  return frobenius_norm(a - b) / std::max(1.0, std::max(frobenius_norm(a), frobenius_norm(b)));
}

}  // namespace oqnet::testing
