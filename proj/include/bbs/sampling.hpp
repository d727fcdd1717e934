#pragma once

// Dataset generation and sample breaking.

#include <cstddef>
#include <utility>
#include <vector>

#include "bbs/core.hpp"
#include "bbs/models/concepts.hpp"
#include "bbs/rng.hpp"

namespace bbs {

/// Draws N batches of M i.i.d. pairs from the model's joint law. The i-th x
/// and the i-th y of each batch are still paired on return.
template <GenerativeModel Model>
Dataset generate_dataset(const Model& model, std::size_t m, std::size_t n, RandomStream& rng) {
  if (m == 0 || n == 0) throw Error(ErrorCode::InvalidSize, "batch size and batch count must be positive");
  Dataset data;
  data.batches.reserve(n);
  const std::size_t dx = model.x_dim(), dy = model.y_dim();
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> xs, ys;
    xs.reserve(m * dx);
    ys.reserve(m * dy);
    for (std::size_t i = 0; i < m; ++i) {
      PairSample s = model.sample_pair(rng);
      xs.insert(xs.end(), s.x.begin(), s.x.end());
      ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    data.batches.emplace_back(dx, dy, std::move(xs), std::move(ys));
  }
  return data;
}

/// Uniform random permutation of {0, ..., m-1} by Fisher-Yates, drawing
/// j uniform in [0, i] for i = m-1 down to 1.
inline std::vector<std::size_t> random_permutation(std::size_t m, RandomStream& rng) {
  std::vector<std::size_t> perm(m);
  for (std::size_t i = 0; i < m; ++i) perm[i] = i;
  for (std::size_t i = m; i-- > 1;) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

/// Reorders the points of a batch: point i of the result is point perm[i].
inline std::vector<double> permute_points(const std::vector<double>& flat, std::size_t dim,
                                          const std::vector<std::size_t>& perm) {
  std::vector<double> out(flat.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t c = 0; c < dim; ++c) out[i * dim + c] = flat[perm[i] * dim + c];
  }
  return out;
}

/// Destroys the pairing: every batch's ys are shuffled by an independent
/// uniform permutation. xs are left as they are.
inline Dataset break_batches(const Dataset& data, RandomStream& rng) {
  validate_dataset(data);
  Dataset out;
  out.batches.reserve(data.batches.size());
  for (const auto& b : data.batches) {
    const auto perm = random_permutation(b.size(), rng);
    out.batches.emplace_back(b.x_dim(), b.y_dim(), b.xs_flat(), permute_points(b.ys_flat(), b.y_dim(), perm));
  }
  return out;
}

}  // namespace bbs
