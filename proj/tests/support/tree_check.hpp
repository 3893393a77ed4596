#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "circphase/tree_models.hpp"
#include "oracles.hpp"

namespace testing_support {

/// Walks a fitted tree and compares every split with the exhaustive search on the rows reaching that node.
/// Returns an empty string on agreement, otherwise a description of the first mismatch.
inline std::string compare_with_brute_force(const circphase::RegressionTree& tree,
                                            const std::vector<std::vector<double>>& x,
                                            const std::vector<std::vector<double>>& y, std::size_t min_leaf,
                                            int max_depth) {
  struct Item {
    std::int32_t node;
    std::vector<std::size_t> rows;
    int depth;
  };
  std::vector<std::size_t> all(x.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<Item> stack{{0, all, 0}};
  while (!stack.empty()) {
    Item it = std::move(stack.back());
    stack.pop_back();
    const circphase::TreeNode& node = tree.nodes()[static_cast<std::size_t>(it.node)];
    const oracle::BruteSplit best =
        it.depth < max_depth ? oracle::brute_best_split(x, y, it.rows, min_leaf) : oracle::BruteSplit{};
    if (node.is_leaf()) {
      if (best.found) return "leaf where a split reduces SSE to " + std::to_string(best.sse);
      for (std::size_t c = 0; c < y[0].size(); ++c) {
        double m = 0;
        for (auto r : it.rows) m += y[r][c];
        m /= static_cast<double>(it.rows.size());
        if (std::fabs(node.value[c] - m) > 1e-12 * (1 + std::fabs(m))) return "leaf value is not the mean";
      }
      continue;
    }
    if (!best.found) return "split where no split reduces SSE";
    std::vector<std::size_t> left, right;
    for (auto r : it.rows) {
      (x[r][static_cast<std::size_t>(node.feature)] <= node.threshold ? left : right).push_back(r);
    }
    if (left.empty() || right.empty()) return "split leaves a child empty";
    const double sse = oracle::sse_of(y, left) + oracle::sse_of(y, right);
    if (std::fabs(sse - best.sse) > 1e-12 * (1.0 + best.sse)) {
      return "split SSE " + std::to_string(sse) + " differs from optimum " + std::to_string(best.sse);
    }
    // When the optimum is unique the tree must choose the same feature and gap.
    if (best.second_sse - best.sse > 1e-9 * (1.0 + best.sse)) {
      if (static_cast<std::size_t>(node.feature) != best.feature) return "different split feature";
      if (!(node.threshold >= best.gap_lo && node.threshold < best.gap_hi)) return "threshold outside the optimal gap";
    }
    stack.push_back({node.left, std::move(left), it.depth + 1});
    stack.push_back({node.right, std::move(right), it.depth + 1});
  }
  return "";
}

}  // namespace testing_support
