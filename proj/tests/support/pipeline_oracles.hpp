#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "plateflow/detect/box_ops.hpp"

namespace oracle {

/// Instance label per detection frame via union-find over adjacent pairs closer than gap.
inline std::vector<int> gap_clusters(const std::vector<std::int64_t>& frames, int gap) {
  std::vector<std::size_t> parent(frames.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i];
    return i;
  };
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (std::size_t j = i + 1; j < frames.size(); ++j) {
      // Same vehicle iff no gap of at least `gap` separates any consecutive pair between them.
      bool joined = true;
      for (std::size_t k = i + 1; k <= j; ++k) joined = joined && frames[k] - frames[k - 1] < gap;
      if (joined) parent[find(j)] = find(i);
    }
  }
  std::vector<int> labels(frames.size());
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto r = find(i);
    auto it = std::find(roots.begin(), roots.end(), r);
    if (it == roots.end()) {
      roots.push_back(r);
      it = roots.end() - 1;
    }
    labels[i] = static_cast<int>(it - roots.begin()) + 1;
  }
  return labels;
}

/// Top-k after a full sort by (confidence desc, frame asc).
inline std::vector<plateflow::detect::Detection> top_k(std::vector<plateflow::detect::Detection> all, int k) {
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.confidence != b.confidence ? a.confidence > b.confidence : a.frame_index < b.frame_index;
  });
  if (all.size() > static_cast<std::size_t>(k)) all.resize(static_cast<std::size_t>(k));
  return all;
}

}  // namespace oracle
