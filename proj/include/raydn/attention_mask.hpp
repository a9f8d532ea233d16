// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace raydn {

// Square blocking matrix over the query layout [group_0 | ... | object
// queries]. blocked(r, c) == true forbids attention from row-query r to
// column-key c.
struct AttentionMask {
  std::size_t n_total = 0;
  std::vector<bool> blocked_;  // row-major n_total * n_total

  bool blocked(std::size_t row, std::size_t col) const {
    return blocked_[row * n_total + col];
  }
};

// Rules: object queries never attend to ray queries; distinct ray groups never
// attend to each other; everything else (diagonal, within-group, ray->object,
// object->object) is allowed.
AttentionMask build_attention_mask(std::size_t n_obj,
                                   const std::vector<std::size_t>& group_sizes);

// 0/1 grid, one row per line (1 = blocked). Debug aid and golden-file format.
std::string dump_mask(const AttentionMask& mask);

}  // namespace raydn
