#include "blmc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "blmc/parallel.hpp"

namespace blmc {

std::vector<int> order_locations(const Matrix& coords) {
  const int n = static_cast<int>(coords.rows());
  if (n == 0) throw ConfigError("order_locations: empty coordinate set");
  if (!coords.allFinite()) throw ConfigError("order_locations: non-finite coordinate");
  Vector key = coords.rowwise().sum();
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&key](int a, int b) {
    if (key[a] != key[b]) return key[a] < key[b];
    return a < b;
  });
  return idx;
}

LocationSet make_location_set(const Matrix& coords) {
  std::vector<int> perm = order_locations(coords);
  const int n = static_cast<int>(coords.rows());
  LocationSet out;
  out.coords.resize(n, coords.cols());
  out.order.assign(static_cast<std::size_t>(n), 0);
  for (int k = 0; k < n; ++k) {
    out.coords.row(k) = coords.row(perm[static_cast<std::size_t>(k)]);
    out.order[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = k;
  }
  return out;
}

namespace {

// Selects the h smallest (dist^2, index) pairs and returns their indices
// ascending by index.
std::vector<int> select_nearest(std::vector<std::pair<double, int>>& cand, int h) {
  auto cmp = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  };
  if (static_cast<int>(cand.size()) > h) {
    std::nth_element(cand.begin(), cand.begin() + h - 1, cand.end(), cmp);
    cand.resize(static_cast<std::size_t>(h));
  }
  std::vector<int> out;
  out.reserve(cand.size());
  for (const auto& c : cand) out.push_back(c.second);
  std::sort(out.begin(), out.end());
  return out;
}

// Uniform-grid accelerator for 2-D nearest-neighbor queries. Output is
// identical to the exhaustive scan; only the visit order of candidates
// differs. Queries may be restricted to reference indices below a bound
// (the predecessor constraint of the ordered graph).
class NeighborGrid {
 public:
  NeighborGrid(const Matrix& coords, int target_per_cell = 2) : coords_(coords) {
    const int n = static_cast<int>(coords.rows());
    lo_[0] = coords.col(0).minCoeff();
    lo_[1] = coords.col(1).minCoeff();
    double hi0 = coords.col(0).maxCoeff(), hi1 = coords.col(1).maxCoeff();
    double extent = std::max(hi0 - lo_[0], hi1 - lo_[1]);
    cells_per_side_ = std::max(
        1, static_cast<int>(std::sqrt(static_cast<double>(n) / target_per_cell)));
    cell_ = extent > 0 ? extent / cells_per_side_ : 1.0;
    cells_.resize(static_cast<std::size_t>(cells_per_side_) * cells_per_side_);
    for (int i = 0; i < n; ++i) {
      cells_[cell_of(coords.row(i))].push_back(i);  // ascending by construction
    }
  }

  // The h nearest points to `query` among reference indices < bound
  // (bound < 0: no restriction), excluding nothing else; same (dist,
  // index) tie rule as the exhaustive scan. Returns (dist^2, index) pairs.
  std::vector<std::pair<double, int>> nearest(const Eigen::RowVector2d& query, int h,
                                              int bound) const {
    auto worse = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second < b.second;  // max-heap: "largest" = farthest / larger idx
    };
    std::vector<std::pair<double, int>> heap;
    heap.reserve(static_cast<std::size_t>(h) + 1);
    int cx = cell_coord(query[0] - lo_[0]);
    int cy = cell_coord(query[1] - lo_[1]);
    const int max_ring = 2 * cells_per_side_;
    for (int ring = 0; ring <= max_ring; ++ring) {
      bool any_cell = false;
      for (int dx = -ring; dx <= ring; ++dx) {
        for (int dy = -ring; dy <= ring; ++dy) {
          if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
          int gx = cx + dx, gy = cy + dy;
          if (gx < 0 || gy < 0 || gx >= cells_per_side_ || gy >= cells_per_side_) continue;
          any_cell = true;
          const auto& cell = cells_[static_cast<std::size_t>(gx) * cells_per_side_ + gy];
          for (int j : cell) {
            if (bound >= 0 && j >= bound) break;  // lists ascend by index
            double d2 = (query - coords_.row(j)).squaredNorm();
            std::pair<double, int> cand{d2, j};
            if (static_cast<int>(heap.size()) < h) {
              heap.push_back(cand);
              std::push_heap(heap.begin(), heap.end(), worse);
            } else if (worse(cand, heap.front())) {
              std::pop_heap(heap.begin(), heap.end(), worse);
              heap.back() = cand;
              std::push_heap(heap.begin(), heap.end(), worse);
            }
          }
        }
      }
      // Any point in ring r+1 or beyond lies at least r cell-widths away;
      // once that strictly exceeds the current worst kept distance no
      // farther ring can improve the set (ties resolve inside the ring
      // where they occur, so strict comparison is required).
      if (static_cast<int>(heap.size()) == h) {
        double safe = static_cast<double>(ring) * cell_;
        if (safe * safe > heap.front().first) break;
      }
      if (!any_cell && ring > 0 && static_cast<int>(heap.size()) == h) break;
    }
    return heap;
  }

 private:
  int cell_coord(double offset) const {
    int c = static_cast<int>(offset / cell_);
    return std::min(std::max(c, 0), cells_per_side_ - 1);
  }
  std::size_t cell_of(const Eigen::RowVector2d& p) const {
    return static_cast<std::size_t>(cell_coord(p[0] - lo_[0])) * cells_per_side_ +
           cell_coord(p[1] - lo_[1]);
  }

  const Matrix& coords_;
  double lo_[2] = {0.0, 0.0};
  double cell_ = 1.0;
  int cells_per_side_ = 1;
  std::vector<std::vector<int>> cells_;
};

constexpr int kGridThreshold = 4096;

std::vector<int> heap_to_sorted_indices(std::vector<std::pair<double, int>>&& heap) {
  std::vector<int> out;
  out.reserve(heap.size());
  for (const auto& c : heap) out.push_back(c.second);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

NeighborGraph build_neighbor_graph(const LocationSet& locs, int m, int threads) {
  if (m < 1) throw ConfigError("build_neighbor_graph: m must be >= 1");
  const int n = locs.size();
  NeighborGraph graph;
  graph.max_neighbors = m;
  graph.neighbors.resize(static_cast<std::size_t>(n));
  std::vector<unsigned char> dup(static_cast<std::size_t>(n), 0);
  const bool use_grid = n >= kGridThreshold && locs.dim() == 2;
  std::optional<NeighborGrid> grid;
  if (use_grid) grid.emplace(locs.coords);
  parallel_for(n, threads, [&](int i) {
    const int h = std::min(m, i);
    if (h == 0) return;
    if (use_grid) {
      auto heap = grid->nearest(locs.coords.row(i), h, i);
      for (const auto& c : heap) {
        if (c.first == 0.0) dup[static_cast<std::size_t>(i)] = 1;
      }
      graph.neighbors[static_cast<std::size_t>(i)] = heap_to_sorted_indices(std::move(heap));
      return;
    }
    std::vector<std::pair<double, int>> cand;
    cand.reserve(static_cast<std::size_t>(i));
    for (int j = 0; j < i; ++j) {
      double d2 = (locs.coords.row(i) - locs.coords.row(j)).squaredNorm();
      if (d2 == 0.0) dup[static_cast<std::size_t>(i)] = 1;
      cand.emplace_back(d2, j);
    }
    graph.neighbors[static_cast<std::size_t>(i)] = select_nearest(cand, h);
  });
  for (int i = 0; i < n; ++i) {
    if (dup[static_cast<std::size_t>(i)]) {
      graph.has_duplicates = true;
      break;
    }
  }
  return graph;
}

PredictionNeighborhoods build_prediction_neighbors(const LocationSet& ref,
                                                   const Matrix& new_locs, int m,
                                                   int threads) {
  if (ref.size() == 0) throw ConfigError("build_prediction_neighbors: empty reference set");
  if (m < 1) throw ConfigError("build_prediction_neighbors: m must be >= 1");
  if (new_locs.cols() != ref.coords.cols()) {
    throw ConfigError("build_prediction_neighbors: coordinate dimension mismatch");
  }
  const int n = ref.size();
  const int h = std::min(m, n);
  const int np = static_cast<int>(new_locs.rows());
  PredictionNeighborhoods out;
  out.neighbors.resize(static_cast<std::size_t>(np));
  auto cmp = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  };
  const bool use_grid = n >= kGridThreshold && ref.dim() == 2 && new_locs.cols() == 2;
  std::optional<NeighborGrid> grid;
  if (use_grid) grid.emplace(ref.coords);
  parallel_for(np, threads, [&](int i) {
    std::vector<int>& list = out.neighbors[static_cast<std::size_t>(i)];
    list.reserve(static_cast<std::size_t>(h));
    if (use_grid) {
      auto heap = grid->nearest(new_locs.row(i), h, -1);
      std::sort(heap.begin(), heap.end(), cmp);  // nearest first
      for (const auto& c : heap) list.push_back(c.second);
      return;
    }
    std::vector<std::pair<double, int>> cand;
    cand.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      cand.emplace_back((new_locs.row(i) - ref.coords.row(j)).squaredNorm(), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + h, cand.end(), cmp);
    for (int k = 0; k < h; ++k) list.push_back(cand[static_cast<std::size_t>(k)].second);
  });
  return out;
}

}  // namespace blmc
