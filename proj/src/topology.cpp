#include "asyncell/topology.hpp"

#include <algorithm>
#include <stdexcept>

namespace asyncell {

std::string to_string(Neighborhood nb) {
  return nb == Neighborhood::moore ? "moore" : "von-neumann";
}

Lattice::Lattice(int dim, int side) : dim_(dim), side_(side), cell_count_(1) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("lattice dimension must be 1, 2 or 3");
  if (side < 1) throw std::invalid_argument("lattice side must be positive");
  for (int i = 0; i < dim; ++i) cell_count_ *= static_cast<std::size_t>(side);
  if (cell_count_ > 0xffffffffULL) throw std::invalid_argument("lattice too large for 32-bit cell ids");
}

Lattice::Coords Lattice::coords(CellId c) const {
  if (!valid(c)) throw std::invalid_argument("cell id out of range");
  Coords x{0, 0, 0};
  for (int i = dim_ - 1; i >= 0; --i) {
    x[static_cast<std::size_t>(i)] = static_cast<int>(c % static_cast<CellId>(side_));
    c /= static_cast<CellId>(side_);
  }
  return x;
}

CellId Lattice::cell_at(Coords x) const {
  std::uint64_t id = 0;
  for (int i = 0; i < dim_; ++i) {
    int v = x[static_cast<std::size_t>(i)] % side_;
    if (v < 0) v += side_;
    id = id * static_cast<std::uint64_t>(side_) + static_cast<std::uint64_t>(v);
  }
  return static_cast<CellId>(id);
}

std::vector<CellId> Lattice::first_neighbors(CellId c, Neighborhood nb) const {
  const Coords x = coords(c);
  std::vector<CellId> out;
  if (nb == Neighborhood::von_neumann) {
    for (int axis = 0; axis < dim_; ++axis) {
      for (int step : {-1, 1}) {
        Coords y = x;
        y[static_cast<std::size_t>(axis)] += step;
        out.push_back(cell_at(y));
      }
    }
  } else {
    const int span = dim_ == 1 ? 3 : dim_ == 2 ? 9 : 27;
    for (int k = 0; k < span; ++k) {
      Coords y = x;
      int rest = k;
      bool centre = true;
      for (int axis = 0; axis < dim_; ++axis) {
        const int off = rest % 3 - 1;
        rest /= 3;
        if (off != 0) centre = false;
        y[static_cast<std::size_t>(axis)] += off;
      }
      if (!centre) out.push_back(cell_at(y));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  std::erase(out, c);
  return out;
}

std::vector<CellId> neighbors(const Lattice& lattice, CellId c, int q, Neighborhood nb) {
  if (!lattice.valid(c)) throw std::invalid_argument("cell id out of range");
  if (q < 1) throw std::invalid_argument("neighborhood degree must be >= 1");
  std::vector<CellId> set{c};
  for (int step = 0; step < q; ++step) {
    std::vector<CellId> next = set;
    for (CellId x : set) {
      const auto first = lattice.first_neighbors(x, nb);
      next.insert(next.end(), first.begin(), first.end());
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    if (next.size() == set.size()) break;
    set = std::move(next);
  }
  return set;
}

NeighborTable::NeighborTable(const Lattice& lattice, int q, Neighborhood nb)
    : lattice_(lattice), q_(q), kind_(nb) {
  if (q < 1) throw std::invalid_argument("neighborhood degree must be >= 1");
  const std::size_t n = lattice.cell_count();
  for (CellId c = 0; c < n; ++c) {
    std::vector<CellId> list =
        q == 1 ? lattice.first_neighbors(c, nb) : neighbors(lattice, c, q, nb);
    std::erase(list, c);
    if (c == 0) {
      degree_ = list.size();
      flat_.reserve(n * degree_);
    } else if (list.size() != degree_) {
      throw std::logic_error("non-uniform neighborhood size on a torus");
    }
    flat_.insert(flat_.end(), list.begin(), list.end());
  }
}

bool NeighborTable::adjacent(CellId a, CellId b) const noexcept {
  const auto list = of(a);
  return std::find(list.begin(), list.end(), b) != list.end();
}

Partition::Partition(const Lattice& lattice, int m, int q, Neighborhood nb)
    : table_(lattice, q, nb), m_(m) {
  const int n = lattice.side();
  if (m < 1 || m > n || n % m != 0) {
    throw std::invalid_argument("subarray side m must divide the lattice side n");
  }
  grid_side_ = n / m;
  subarray_count_ = 1;
  cells_per_subarray_ = 1;
  for (int i = 0; i < lattice.dim(); ++i) {
    subarray_count_ *= static_cast<std::size_t>(grid_side_);
    cells_per_subarray_ *= static_cast<std::size_t>(m);
  }

  const std::size_t total = lattice.cell_count();
  owner_.resize(total);
  local_.resize(total);
  members_.resize(total);
  for (CellId c = 0; c < total; ++c) {
    const auto x = lattice.coords(c);
    std::size_t block = 0;
    std::size_t local = 0;
    for (int i = 0; i < lattice.dim(); ++i) {
      const auto xi = static_cast<std::size_t>(x[static_cast<std::size_t>(i)]);
      block = block * static_cast<std::size_t>(grid_side_) + xi / static_cast<std::size_t>(m);
      local = local * static_cast<std::size_t>(m) + xi % static_cast<std::size_t>(m);
    }
    owner_[c] = static_cast<SubarrayId>(block);
    local_[c] = static_cast<std::uint32_t>(local);
    members_[block * cells_per_subarray_ + local] = c;
  }

  w_offsets_.reserve(total + 1);
  w_offsets_.push_back(0);
  std::vector<SubarrayId> scratch;
  for (CellId c = 0; c < total; ++c) {
    scratch.clear();
    for (CellId x : table_.of(c)) {
      if (owner_[x] != owner_[c]) scratch.push_back(owner_[x]);
    }
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    w_flat_.insert(w_flat_.end(), scratch.begin(), scratch.end());
    w_offsets_.push_back(w_flat_.size());
  }
}

std::vector<CellId> Partition::kernel_cells(SubarrayId s) const {
  check_subarray(*this, s);
  std::vector<CellId> out;
  for (CellId c : cells_of(s)) {
    if (is_kernel(c)) out.push_back(c);
  }
  return out;
}

std::vector<SubarrayId> Partition::adjacent_subarrays(SubarrayId s) const {
  check_subarray(*this, s);
  const int dim = lattice().dim();
  std::array<int, 3> g{0, 0, 0};
  std::size_t rest = s;
  for (int i = dim - 1; i >= 0; --i) {
    g[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::size_t>(grid_side_));
    rest /= static_cast<std::size_t>(grid_side_);
  }
  std::vector<SubarrayId> out;
  for (int axis = 0; axis < dim; ++axis) {
    for (int step : {-1, 1}) {
      auto h = g;
      auto& v = h[static_cast<std::size_t>(axis)];
      v = ((v + step) % grid_side_ + grid_side_) % grid_side_;
      std::size_t id = 0;
      for (int i = 0; i < dim; ++i) {
        id = id * static_cast<std::size_t>(grid_side_) + static_cast<std::size_t>(h[static_cast<std::size_t>(i)]);
      }
      out.push_back(static_cast<SubarrayId>(id));
    }
  }
  return out;
}

void check_subarray(const Partition& p, SubarrayId s) {
  if (s >= p.subarray_count()) throw std::invalid_argument("subarray id out of range");
}

}  // namespace asyncell
