#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace asyncell {

using CellId = std::uint32_t;
using SubarrayId = std::uint32_t;

enum class Neighborhood : std::uint8_t {
  von_neumann,  ///< 2*dim axis neighbors
  moore,        ///< 3^dim - 1 neighbors (all offsets in {-1,0,1}^dim)
};

std::string to_string(Neighborhood nb);

/// Periodic d-dimensional lattice of side n. Cell ids are row-major with the
/// last coordinate varying fastest.
class Lattice {
 public:
  using Coords = std::array<int, 3>;

  Lattice(int dim, int side);

  int dim() const noexcept { return dim_; }
  int side() const noexcept { return side_; }
  std::size_t cell_count() const noexcept { return cell_count_; }

  bool valid(CellId c) const noexcept { return c < cell_count_; }
  Coords coords(CellId c) const;
  /// Coordinates are wrapped onto the torus before encoding.
  CellId cell_at(Coords x) const;
  /// The 2*dim (von Neumann) or 3^dim - 1 (Moore) first-degree neighbors,
  /// deduplicated, excluding c itself. Fewer appear when side < 3.
  std::vector<CellId> first_neighbors(CellId c, Neighborhood nb) const;

 private:
  int dim_;
  int side_;
  std::size_t cell_count_;
};

/// q-th degree neighborhood, including c: neighbors^1(c) is c plus its
/// first-degree neighbors and neighbors^q = neighbors(neighbors^(q-1)).
/// Returned sorted ascending. Throws std::invalid_argument for a bad cell or q < 1.
std::vector<CellId> neighbors(const Lattice& lattice, CellId c, int q,
                              Neighborhood nb = Neighborhood::von_neumann);

/// neighbors(c, q) minus c, precomputed for every cell with a fixed stride
/// (all cells of a torus have the same neighborhood size).
class NeighborTable {
 public:
  NeighborTable(const Lattice& lattice, int q, Neighborhood nb);

  const Lattice& lattice() const noexcept { return lattice_; }
  int degree_q() const noexcept { return q_; }
  Neighborhood kind() const noexcept { return kind_; }
  std::size_t degree() const noexcept { return degree_; }

  std::span<const CellId> of(CellId c) const noexcept {
    return {flat_.data() + static_cast<std::size_t>(c) * degree_, degree_};
  }
  /// True when b is in neighbors(a, q) \ {a}.
  bool adjacent(CellId a, CellId b) const noexcept;

 private:
  Lattice lattice_;
  int q_;
  Neighborhood kind_;
  std::size_t degree_ = 0;
  std::vector<CellId> flat_;
};

/// Split of the lattice into (n/m)^dim cubes of side m, one per logical PE.
class Partition {
 public:
  Partition(const Lattice& lattice, int m, int q = 1, Neighborhood nb = Neighborhood::von_neumann);

  const Lattice& lattice() const noexcept { return table_.lattice(); }
  const NeighborTable& neighbor_table() const noexcept { return table_; }
  int m() const noexcept { return m_; }
  int q() const noexcept { return table_.degree_q(); }
  int grid_side() const noexcept { return grid_side_; }
  std::size_t subarray_count() const noexcept { return subarray_count_; }
  std::size_t cells_per_subarray() const noexcept { return cells_per_subarray_; }

  SubarrayId subarray_of(CellId c) const noexcept { return owner_[c]; }
  /// Position of c inside its subarray, row-major over the subarray block.
  std::uint32_t local_index(CellId c) const noexcept { return local_[c]; }
  /// Cells of C ordered by local index.
  std::span<const CellId> cells_of(SubarrayId s) const noexcept {
    return {members_.data() + static_cast<std::size_t>(s) * cells_per_subarray_, cells_per_subarray_};
  }

  /// Subarrays other than c's own that host a member of neighbors(c, q).
  std::span<const SubarrayId> w_set(CellId c) const noexcept {
    return {w_flat_.data() + w_offsets_[c], w_offsets_[c + 1] - w_offsets_[c]};
  }
  bool is_kernel(CellId c) const noexcept { return w_offsets_[c + 1] == w_offsets_[c]; }
  /// Cells of C with an empty W set.
  std::vector<CellId> kernel_cells(SubarrayId s) const;

  /// The 2*dim face-adjacent subarrays of s (may repeat on small grids).
  std::vector<SubarrayId> adjacent_subarrays(SubarrayId s) const;

 private:
  NeighborTable table_;
  int m_;
  int grid_side_;
  std::size_t subarray_count_;
  std::size_t cells_per_subarray_;
  std::vector<SubarrayId> owner_;
  std::vector<std::uint32_t> local_;
  std::vector<CellId> members_;
  std::vector<std::size_t> w_offsets_;
  std::vector<SubarrayId> w_flat_;
};

/// Validates a subarray id; throws std::invalid_argument.
void check_subarray(const Partition& p, SubarrayId s);

}  // namespace asyncell
