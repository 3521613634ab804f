/*
 * Copyright 2026 The clipbias Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

namespace clipbias {

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

struct VectorMeanEstimate {
  std::vector<double> mean;
  std::vector<double> std_error;
  std::uint64_t samples = 0;
};

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace detail {

inline constexpr std::uint64_t kChunk = 8192;

struct ChunkMoments {
  std::uint64_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;
};

// Chan et al. pairwise merge of running moments.
inline void merge_into(ChunkMoments& acc, const ChunkMoments& part) {
  if (part.count == 0) return;
  if (acc.count == 0) {
    acc = part;
    return;
  }
  const double na = static_cast<double>(acc.count);
  const double nb = static_cast<double>(part.count);
  const double n = na + nb;
  for (std::size_t j = 0; j < acc.mean.size(); ++j) {
    const double delta = part.mean[j] - acc.mean[j];
    acc.mean[j] += delta * nb / n;
    acc.m2[j] += part.m2[j] + delta * delta * na * nb / n;
  }
  acc.count += part.count;
}

}  // namespace detail

// Mean and standard error of f over draws [0, n). f(draw_index, out) writes
// one dim-sized sample into out. Chunks are merged in index order, so the
// result is bit-identical for any worker count.
template <typename F>
VectorMeanEstimate monte_carlo_vector_mean(std::uint64_t n, std::size_t dim, F&& f,
                                           unsigned workers = default_workers()) {
  const std::uint64_t chunks = (n + detail::kChunk - 1) / detail::kChunk;
  std::vector<detail::ChunkMoments> parts(chunks);

  auto run_chunk = [&](std::uint64_t k) {
    detail::ChunkMoments m{0, std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
    std::vector<double> x(dim);
    const std::uint64_t end = std::min(n, (k + 1) * detail::kChunk);
    for (std::uint64_t i = k * detail::kChunk; i < end; ++i) {
      std::fill(x.begin(), x.end(), 0.0);
      f(i, std::span<double>(x));
      ++m.count;
      const double cnt = static_cast<double>(m.count);
      for (std::size_t j = 0; j < dim; ++j) {
        const double delta = x[j] - m.mean[j];
        m.mean[j] += delta / cnt;
        m.m2[j] += delta * (x[j] - m.mean[j]);
      }
    }
    parts[k] = std::move(m);
  };

  const unsigned nthreads =
      static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, workers), chunks));
  if (nthreads <= 1) {
    for (std::uint64_t k = 0; k < chunks; ++k) run_chunk(k);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < nthreads; ++t) {
      pool.emplace_back([&] {
        for (std::uint64_t k = next++; k < chunks; k = next++) run_chunk(k);
      });
    }
  }

  detail::ChunkMoments total{0, std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (const auto& p : parts) detail::merge_into(total, p);

  VectorMeanEstimate out{total.mean, std::vector<double>(dim, 0.0), total.count};
  if (total.count > 1) {
    const double cnt = static_cast<double>(total.count);
    for (std::size_t j = 0; j < dim; ++j)
      out.std_error[j] = std::sqrt(total.m2[j] / (cnt - 1.0) / cnt);
  }
  return out;
}

template <typename F>
MeanEstimate monte_carlo_mean(std::uint64_t n, F&& f, unsigned workers = default_workers()) {
  auto v = monte_carlo_vector_mean(
      n, 1, [&](std::uint64_t i, std::span<double> out) { out[0] = f(i); }, workers);
  return {v.mean[0], v.std_error[0], v.samples};
}

}  // namespace clipbias
