#pragma once

#include <vector>

#include "blmc/types.hpp"

namespace blmc {

/// Locations held in model order (the fixed ordering every Vecchia-type
/// construction downstream relies on). `order[storage] = model` maps a
/// row of the original input to its model index.
struct LocationSet {
  Matrix coords;            // n x d, rows already in model order
  std::vector<int> order;   // storage index -> model index

  int size() const { return static_cast<int>(coords.rows()); }
  int dim() const { return static_cast<int>(coords.cols()); }
};

/// Deterministic location ordering: ascending coordinate sum, ties broken
/// by original index. Returns the storage index occupying each model slot
/// (an argsort), so an already-sorted input yields the identity.
std::vector<int> order_locations(const Matrix& coords);

/// Builds a LocationSet by applying order_locations to raw coordinates.
LocationSet make_location_set(const Matrix& coords);

/// Directed nearest-neighbor sets over earlier-ordered locations:
/// neighbors[i] holds the min(m, i) model indices j < i closest to i in
/// Euclidean distance (ties to the smaller index), stored ascending.
struct NeighborGraph {
  std::vector<std::vector<int>> neighbors;
  int max_neighbors = 0;
  bool has_duplicates = false;  // some pair at distance exactly zero

  int size() const { return static_cast<int>(neighbors.size()); }
};

NeighborGraph build_neighbor_graph(const LocationSet& locs, int m, int threads = 1);

/// For each new location, the min(m, n) nearest reference model indices,
/// nearest first, ties to the smaller index.
struct PredictionNeighborhoods {
  std::vector<std::vector<int>> neighbors;
};

PredictionNeighborhoods build_prediction_neighbors(const LocationSet& ref,
                                                   const Matrix& new_locs, int m,
                                                   int threads = 1);

}  // namespace blmc
