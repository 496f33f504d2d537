#include <doctest.h>

#include <sstream>

#include "../common/fixture.hpp"
#include "g3d/obj_io.hpp"
#include "g3d/run_config.hpp"

using namespace g3d;
using g3d_test::TempDir;

namespace {

RunConfig tiny(const TempDir& dir, const std::string& name, int iterations, const std::string& extra = {}) {
  return parse_run_config(g3d_test::tiny_config_text(dir / name, iterations) + extra);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

double field(const std::string& line, const std::string& key) {
  const auto at = line.find(" " + key + "=");
  REQUIRE(at != std::string::npos);
  return std::stod(line.substr(at + key.size() + 2));
}

}  // namespace

TEST_SUITE("runs") {

TEST_CASE("identical seeds give byte-identical logs and meshes") {
  TempDir dir;
  run_optimization(tiny(dir, "a", 6));
  run_optimization(tiny(dir, "b", 6));
  for (const char* f : {"losses.log", "mesh_high.obj", "mesh_low.obj", "renders/view_2.png"})
    CHECK_MESSAGE(g3d_test::read_text(dir / "a" / f) == g3d_test::read_text(dir / "b" / f), f);
  // Checkpoints differ only in the stored output path.
  const Checkpoint ca = read_checkpoint(dir / "a" / "checkpoint.g3dc");
  const Checkpoint cb = read_checkpoint(dir / "b" / "checkpoint.g3dc");
  REQUIRE(ca.sections.size() == cb.sections.size());
  for (std::size_t i = 0; i < ca.sections.size(); ++i) {
    CHECK(ca.sections[i].name == cb.sections[i].name);
    if (ca.sections[i].name != "meta.config") CHECK_MESSAGE(ca.sections[i].data == cb.sections[i].data, ca.sections[i].name);
  }
}

TEST_CASE("a different seed changes the run") {
  TempDir dir;
  RunConfig a = tiny(dir, "a", 4), b = tiny(dir, "b", 4);
  b.seed = a.seed + 1;
  run_optimization(a);
  run_optimization(b);
  CHECK(g3d_test::read_text(dir / "a" / "losses.log") != g3d_test::read_text(dir / "b" / "losses.log"));
}

TEST_CASE("resuming from a checkpoint matches the uninterrupted run") {
  TempDir dir;
  run_optimization(tiny(dir, "full", 6));
  RunOptions o;
  o.resume = dir / "full" / "checkpoint_3.g3dc";
  run_optimization(tiny(dir, "resumed", 6), o);
  const auto full = lines_of(g3d_test::read_text(dir / "full" / "losses.log"));
  const auto resumed = lines_of(g3d_test::read_text(dir / "resumed" / "losses.log"));
  REQUIRE(full.size() == 6);
  REQUIRE(resumed.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(resumed[i] == full[3 + i]);
  CHECK(g3d_test::read_text(dir / "resumed" / "mesh_high.obj") == g3d_test::read_text(dir / "full" / "mesh_high.obj"));
  CHECK(g3d_test::read_text(dir / "resumed" / "mesh_low.obj") == g3d_test::read_text(dir / "full" / "mesh_low.obj"));
}

TEST_CASE("zero iterations export the initialized mesh") {
  TempDir dir;
  const RunConfig c = tiny(dir, "zero", 0);
  const RunReport r = run_optimization(c);
  CHECK(r.steps.empty());
  CHECK(g3d_test::read_text(r.loss_log).empty());
  Model m(c);
  init_grids(m, ShapeTemplate::parse(c.shape), c.init_iterations, c.init_points, c.seed);
  CHECK(g3d_test::read_text(r.high_mesh) == format_obj(grid_mesh(m.high_grid(), m.predict_high())));
  CHECK(validate_mesh(import_obj(r.high_mesh)).watertight);
}

TEST_CASE("the losses go down") {
  TempDir dir;
  RunConfig c = tiny(dir, "long", 60);
  c.init_iterations = 200;
  c.low_resolution = 10;
  c.high_resolution = 14;
  const RunReport r = run_optimization(c);
  REQUIRE(r.steps.size() == 60);
  double first = 0, last = 0, first_total = 0, last_total = 0;
  for (int i = 0; i < 10; ++i) {
    first += r.steps[i].known;
    last += r.steps[50 + i].known;
    first_total += r.steps[i].total;
    last_total += r.steps[50 + i].total;
  }
  CHECK(last < first);
  CHECK(last_total < 0.8 * first_total);
  const auto lines = lines_of(g3d_test::read_text(r.loss_log));
  CHECK(field(lines[0], "known") == doctest::Approx(r.steps[0].known).epsilon(1e-6));
}

}  // TEST_SUITE
