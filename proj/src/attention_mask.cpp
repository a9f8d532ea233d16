// SPDX-License-Identifier: Apache-2.0
#include "raydn/attention_mask.hpp"

#include "raydn/error.hpp"

namespace raydn {

AttentionMask build_attention_mask(std::size_t n_obj,
                                   const std::vector<std::size_t>& group_sizes) {
  std::size_t n_ray = 0;
  for (std::size_t s : group_sizes) {
    if (s < 1) throw DomainError("attention mask group sizes must be >= 1");
    n_ray += s;
  }
  const std::size_t n = n_ray + n_obj;

  AttentionMask mask;
  mask.n_total = n;
  mask.blocked_.assign(n * n, false);

  // group id per ray slot; object queries occupy [n_ray, n).
  std::vector<std::size_t> group_of(n_ray);
  std::size_t at = 0;
  for (std::size_t g = 0; g < group_sizes.size(); ++g)
    for (std::size_t i = 0; i < group_sizes[g]; ++i) group_of[at++] = g;

  for (std::size_t r = 0; r < n; ++r) {
    const bool r_is_obj = r >= n_ray;
    for (std::size_t c = 0; c < n_ray; ++c) {
      if (r_is_obj) {
        mask.blocked_[r * n + c] = true;            // object -> ray
      } else if (group_of[r] != group_of[c]) {
        mask.blocked_[r * n + c] = true;            // cross-group
      }
    }
  }
  return mask;
}

std::string dump_mask(const AttentionMask& mask) {
  std::string out;
  out.reserve(mask.n_total * (mask.n_total + 1));
  for (std::size_t r = 0; r < mask.n_total; ++r) {
    for (std::size_t c = 0; c < mask.n_total; ++c)
      out.push_back(mask.blocked(r, c) ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

}  // namespace raydn
