#include <stdexcept>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "asyncell/engine_parallel.hpp"
#include "asyncell/engine_serial.hpp"
#include "asyncell/snapshots.hpp"
#include "doctest.h"

using namespace asyncell;
namespace fs = std::filesystem;

namespace {

struct Recorded {
  std::mutex mutex;
  std::vector<std::uint64_t> order;
  std::map<std::uint64_t, std::vector<State>> images;

  SnapshotSink sink() {
    return [this](std::uint64_t k, double, std::span<const State> image) {
      std::lock_guard lock(mutex);
      order.push_back(k);
      images[k] = std::vector<State>(image.begin(), image.end());
    };
  }
};

fs::path scratch(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "asyncell_snapshot_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("emit stores every due snapshot below new_T") {
  const Lattice l(2, 8);
  const Partition p(l, 4);
  Recorded rec;
  FrameRing ring(p, 3, 1.0, 100.0, rec.sink(), 1);
  const std::vector<State> s(l.cell_count(), 1);
  std::uint64_t k = 1;
  CHECK(emit_due_snapshots(ring, 0, k, 3.7, s));
  CHECK(k == 4);
  CHECK(ring.frontier(0) == 4);
  // snapshot 4 needs the frame of snapshot 1, which is not drained yet
  CHECK_FALSE(emit_due_snapshots(ring, 0, k, 4.5, s));
  CHECK(k == 4);
  CHECK(rec.order.empty());
}

TEST_CASE("no store when new_T does not pass K dt") {
  const Lattice l(2, 8);
  const Partition p(l, 4);
  FrameRing ring(p, 2, 1.0, 100.0, {}, 5);
  const std::vector<State> s(l.cell_count(), 1);
  std::uint64_t k = 5;
  CHECK(emit_due_snapshots(ring, 2, k, 4.2, s));
  CHECK(k == 5);
  CHECK(emit_due_snapshots(ring, 2, k, 5.0, s));
  CHECK(k == 5);
  CHECK(ring.frontier(2) == 5);
}

TEST_CASE("one frame blocks a PE a full interval ahead") {
  const Lattice l(2, 8);
  const Partition p(l, 4);
  Recorded rec;
  FrameRing ring(p, 1, 1.0, 100.0, rec.sink());
  const std::vector<State> s(l.cell_count(), 1);
  std::vector<std::uint64_t> k(4, 0);
  CHECK_FALSE(emit_due_snapshots(ring, 0, k[0], 1.5, s));
  CHECK(k[0] == 1);
  for (SubarrayId c = 1; c < 4; ++c) CHECK(emit_due_snapshots(ring, c, k[c], 0.5, s));
  CHECK(rec.order == std::vector<std::uint64_t>{0});
  CHECK(emit_due_snapshots(ring, 0, k[0], 1.5, s));
  CHECK(k[0] == 2);
}

TEST_CASE("a complete frame is emitted in order and reused B later") {
  const Lattice l(2, 8);
  const Partition p(l, 4);
  Recorded rec;
  FrameRing ring(p, 2, 1.0, 100.0, rec.sink(), 6);
  std::vector<State> s(l.cell_count(), -1);
  for (SubarrayId c = 0; c < 4; ++c) CHECK(ring.try_store(c, 6, s));
  CHECK(rec.order == std::vector<std::uint64_t>{6});
  for (SubarrayId c = 0; c < 4; ++c) CHECK(ring.try_store(c, 7, s));
  CHECK(rec.order == std::vector<std::uint64_t>{6, 7});
  CHECK(ring.try_store(0, 9, s));
  CHECK(ring.try_store(0, 8, s));
  CHECK_FALSE(ring.try_store(0, 10, s));
}

TEST_CASE("a complete later frame waits for the earlier one") {
  const Lattice l(2, 8);
  const Partition p(l, 4);
  Recorded rec;
  FrameRing ring(p, 2, 1.0, 100.0, rec.sink(), 7);
  const std::vector<State> s(l.cell_count(), 1);
  for (SubarrayId c = 0; c < 4; ++c) CHECK(ring.try_store(c, 8, s));
  for (SubarrayId c = 0; c < 3; ++c) CHECK(ring.try_store(c, 7, s));
  CHECK(ring.drain().empty());
  CHECK(rec.order.empty());
  CHECK(ring.next_emit() == 7);
  CHECK(ring.try_store(3, 7, s));
  CHECK(rec.order == std::vector<std::uint64_t>{7, 8});
  CHECK(ring.emitted_count() == 2);
}

TEST_CASE("three frames fill concurrently") {
  const Lattice l(2, 8);
  const Partition p(l, 4);
  Recorded rec;
  FrameRing ring(p, 3, 1.0, 100.0, rec.sink(), 5);
  std::vector<State> s(l.cell_count(), 1);
  std::vector<std::uint64_t> k(4, 5);
  CHECK(emit_due_snapshots(ring, 0, k[0], 7.5, s));
  CHECK(emit_due_snapshots(ring, 1, k[1], 6.5, s));
  CHECK(emit_due_snapshots(ring, 2, k[2], 5.5, s));
  CHECK(ring.frontier(0) == 8);
  CHECK(ring.frontier(1) == 7);
  CHECK(ring.frontier(2) == 6);
  CHECK(ring.min_frontier() == 5);
  CHECK(rec.order.empty());
  CHECK(emit_due_snapshots(ring, 3, k[3], 7.5, s));
  CHECK(rec.order == std::vector<std::uint64_t>{5});
}

TEST_CASE("subarray images land in the right cells") {
  const Lattice l(2, 4);
  const Partition p(l, 2);
  Recorded rec;
  FrameRing ring(p, 1, 1.0, 10.0, rec.sink());
  for (SubarrayId c = 0; c < 4; ++c) {
    std::vector<State> s(l.cell_count(), 0);
    for (CellId x : p.cells_of(c)) s[x] = static_cast<State>(c + 1);
    CHECK(ring.try_store(c, 0, s));
  }
  REQUIRE(rec.images.count(0) == 1);
  for (CellId x = 0; x < l.cell_count(); ++x) CHECK(rec.images[0][x] == static_cast<State>(p.subarray_of(x) + 1));
}

TEST_CASE("sink failures are reported to the PEs") {
  const Lattice l(2, 4);
  const Partition p(l, 4);
  FrameRing ring(p, 1, 1.0, 10.0, [](std::uint64_t, double, std::span<const State>) {
    throw std::ios_base::failure("disk full");
  });
  const std::vector<State> s(l.cell_count(), 1);
  std::uint64_t k = 0;
  CHECK_FALSE(emit_due_snapshots(ring, 0, k, 2.5, s));
  CHECK(ring.failed());
  CHECK_THROWS_AS(emit_due_snapshots(ring, 0, k, 2.5, s), std::ios_base::failure);
}

TEST_CASE("frame ring arguments") {
  const Partition p(Lattice(2, 4), 2);
  CHECK_THROWS_AS(FrameRing(p, 0, 1.0, 1.0, {}), std::invalid_argument);
  CHECK_THROWS_AS(FrameRing(p, 1, 0.0, 1.0, {}), std::invalid_argument);
  const FrameRing ring(p, 2, 0.5, 2.0, {});
  CHECK(ring.due(3));
  CHECK_FALSE(ring.due(4));
}

TEST_CASE("threads storing concurrently emit every snapshot once, in order") {
  const Lattice l(2, 16);
  const Partition p(l, 4);
  Recorded rec;
  FrameRing ring(p, 3, 0.25, 50.0, rec.sink());
  std::vector<State> s(l.cell_count(), 1);
  std::vector<std::thread> threads;
  for (int w = 0; w < 4; ++w) {
    threads.emplace_back([&, w] {
      std::vector<std::uint64_t> k(p.subarray_count(), 0);
      bool more = true;
      while (more) {
        more = false;
        for (SubarrayId c = static_cast<SubarrayId>(w); c < p.subarray_count(); c += 4) {
          if (!emit_due_snapshots(ring, c, k[c], 60.0, s)) std::this_thread::yield();
          more = more || ring.due(k[c]);
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  ring.drain();
  REQUIRE(rec.order.size() == 200);
  for (std::size_t i = 0; i < rec.order.size(); ++i) CHECK(rec.order[i] == i);
}

TEST_CASE("write_pattern text") {
  const fs::path f = scratch("up.pbm");
  const CellModel ising = CellModel::ising({});
  const Lattice l(2, 2);
  write_pattern(make_pattern(ising, l, std::vector<State>{1, 1, 1, 1}, 0.5), f);
  CHECK(slurp(f) == "P1 2 2 t=0.5\n1 1\n1 1\n");
  write_pattern(make_pattern(ising, l, std::vector<State>{1, -1, -1, 1}, 2.0), f);
  CHECK(slurp(f) == "P1 2 2 t=2\n1 0\n0 1\n");
}

TEST_CASE("pattern round trip") {
  const CellModel ising = CellModel::ising({});
  const Lattice l(2, 7);
  std::vector<State> s(l.cell_count());
  for (CellId c = 0; c < s.size(); ++c) s[c] = (c * 7919 % 3 == 0) ? 1 : -1;
  const PatternImage img = make_pattern(ising, l, s, 1.0 / 3.0);
  const fs::path f = pattern_path(scratch(""), 12);
  CHECK(f.filename() == "pattern_K12.pbm");
  write_pattern(img, f);
  const PatternImage back = read_pattern(f);
  CHECK(back.width == 7);
  CHECK(back.height == 7);
  CHECK(back.time == 1.0 / 3.0);
  CHECK(back.bits == img.bits);

  const Lattice cube(3, 3);
  const PatternImage stacked = make_pattern(ising, cube, std::vector<State>(27, -1), 0.0);
  CHECK(stacked.width == 3);
  CHECK(stacked.height == 9);
}

TEST_CASE("unwritable pattern path") {
  const PatternImage img{1, 1, 0.0, {1}};
  CHECK_THROWS_AS(write_pattern(img, "/nonexistent-dir/pattern.pbm"), std::ios_base::failure);
  CHECK_THROWS_AS(read_pattern("/nonexistent-dir/pattern.pbm"), std::ios_base::failure);
  const PatternImage bad{2, 2, 0.0, {1}};
  CHECK_THROWS_AS(write_pattern(bad, scratch("bad.pbm")), std::invalid_argument);
}

TEST_CASE("engine snapshots equal the serial oracle") {
  const Lattice l(2, 32);
  const NeighborTable table(l, 1, Neighborhood::von_neumann);
  const Partition p(l, 8);
  const CellModel model = CellModel::ising({1, 0, 2});
  const ArrivalLaw law = ArrivalLaw::poisson(1);
  SerialOptions so;
  so.seed = 11;
  so.end_time = 5.0;
  const Trajectory oracle = run_serial_eventlist(model, table, law, so);

  for (int workers : {1, 3}) {
    for (std::size_t frames : {1u, 2u, 4u}) {
      Recorded rec;
      EngineConfig cfg;
      cfg.workers = workers;
      cfg.seed = 11;
      cfg.end_time = 5.0;
      cfg.audit = true;
      cfg.snapshots = SnapshotOptions{0.5, frames, rec.sink()};
      const Trajectory t = run_aggregated_general(cfg, model, p, law);
      CHECK(t.hash() == oracle.hash());
      REQUIRE(rec.order.size() == 10);
      for (std::size_t i = 0; i < rec.order.size(); ++i) CHECK(rec.order[i] == i);
      for (const auto& [k, image] : rec.images) CHECK(image == oracle.configuration_at(0.5 * static_cast<double>(k)));
      CHECK(t.stats.snapshots_emitted == 10);
      CHECK(t.stats.max_frontier_lag <= static_cast<double>(frames) * 0.5);
      CHECK(t.stats.below_local_time == 0);
      CHECK(t.stats.nonmonotone_local_time == 0);
    }
  }
}

TEST_CASE("Poisson engine snapshots match its own trajectory") {
  const Lattice l(2, 16);
  const Partition p(l, 4);
  const CellModel model = CellModel::ising({1, 0, 2});
  for (bool bkl : {false, true}) {
    Recorded rec;
    EngineConfig cfg;
    cfg.workers = 2;
    cfg.seed = 3;
    cfg.end_time = 4.0;
    cfg.bkl = bkl;
    cfg.audit = true;
    cfg.snapshots = SnapshotOptions{0.25, 2, rec.sink()};
    const Trajectory t = run_aggregated_poisson(cfg, model, p, 1.0);
    REQUIRE(rec.order.size() == 16);
    for (const auto& [k, image] : rec.images) CHECK(image == t.configuration_at(0.25 * static_cast<double>(k)));
    CHECK(t.stats.max_frontier_lag <= 0.5);
  }
}
