#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "../common/fixture.hpp"
#include "g3d/camera_file.hpp"
#include "g3d/cli.hpp"
#include "g3d/image_io.hpp"
#include "g3d/obj_io.hpp"

using namespace g3d;
using g3d_test::TempDir;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "g3d");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

int tool_exit(const std::string& args) {
  const int status = std::system((std::string(G3D_TOOL_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"frobnicate"}).code == kExitConfig);
  CHECK(cli({"validate"}).code == kExitConfig);
  CHECK(cli({"validate", "--mesh", "x.obj", "--bogus"}).code == kExitConfig);
  CHECK(cli({"extract", "--checkpoint", "c", "--grid", "middle", "--out", "o.obj"}).code == kExitConfig);
  const CliResult missing = cli({"optimize", "--config", "/nonexistent/run.cfg"});
  CHECK(missing.code == kExitConfig);
  CHECK(missing.err.find("run.cfg") != std::string::npos);
  CHECK(cli({"--help"}).code == kExitOk);
  // The installed binary reports the same codes to the shell.
  CHECK(tool_exit("") == 2);
  CHECK(tool_exit("optimize --config /nonexistent/run.cfg") == 2);
  CHECK(tool_exit("--help") == 0);
}

TEST_CASE("validate reports mesh topology") {
  TempDir dir;
  TriMesh tet;
  tet.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  tet.triangles = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  tet.normals = compute_vertex_normals(tet.positions, tet.triangles);
  export_obj(tet, dir / "tet.obj");
  const CliResult ok = cli({"validate", "--mesh", (dir / "tet.obj").string()});
  CHECK(ok.code == kExitOk);
  CHECK(ok.out.find("vertices=4\n") != std::string::npos);
  CHECK(ok.out.find("triangles=4\n") != std::string::npos);
  CHECK(ok.out.find("watertight=true\n") != std::string::npos);
  CHECK(ok.out.find("consistently_oriented=true\n") != std::string::npos);

  tet.triangles.pop_back();
  export_obj(tet, dir / "open.obj");
  const CliResult open = cli({"validate", "--mesh", (dir / "open.obj").string()});
  CHECK(open.code == kExitOk);
  CHECK(open.out.find("watertight=false") != std::string::npos);
  CHECK(open.out.find("boundary_edges=3") != std::string::npos);

  CHECK(cli({"validate", "--mesh", (dir / "none.obj").string()}).code == kExitConfig);
  g3d_test::write_text(dir / "bad.obj", "v 1 2\nf 1 2 3\n");
  CHECK(cli({"validate", "--mesh", (dir / "bad.obj").string()}).code == kExitRuntime);
}

TEST_CASE("init, extract and render from a checkpoint") {
  TempDir dir;
  g3d_test::write_text(dir / "run.cfg", g3d_test::tiny_config_text(dir / "out"));
  const CliResult init = cli({"init", "--config", (dir / "run.cfg").string()});
  REQUIRE_MESSAGE(init.code == kExitOk, init.err);
  const auto ckpt = dir / "out" / "checkpoint_init.g3dc";
  CHECK(std::filesystem::exists(ckpt));
  CHECK(init.out.find("init iterations=200") != std::string::npos);

  const CliResult high = cli({"extract", "--checkpoint", ckpt.string(), "--out", (dir / "high.obj").string()});
  REQUIRE_MESSAGE(high.code == kExitOk, high.err);
  CHECK(high.out.find("watertight=true") != std::string::npos);
  const TriMesh mesh = import_obj(dir / "high.obj");
  CHECK_FALSE(mesh.empty());
  // The sphere template spans 1.2 units.
  Real lo = 1e9, hi = -1e9;
  for (const Vec3& p : mesh.positions) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
  }
  CHECK(hi - lo > 1.0);

  const CliResult low = cli({"extract", "--checkpoint", ckpt.string(), "--grid", "low", "--out",
                             (dir / "low.obj").string()});
  REQUIRE_MESSAGE(low.code == kExitOk, low.err);
  CHECK(std::filesystem::exists(dir / "low.obj"));

  std::vector<CameraSpec> cams(2);
  cams[0] = {0, 0, 3, 40, 24, 16, 1};
  cams[1] = {90, 20, 3, 40, 24, 16, 0};
  save_camera_file(dir / "cams.json", cams);
  const CliResult r = cli({"render", "--checkpoint", ckpt.string(), "--camera-file", (dir / "cams.json").string(),
                           "--out-dir", (dir / "renders").string()});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  for (const char* name : {"view_1.png", "view_1_normal.png", "view_2_mask.png"})
    CHECK(std::filesystem::exists(dir / "renders" / name));
  const Image mask = read_png(dir / "renders" / "view_1_mask.png");
  CHECK(mask.width == 24);
  CHECK(mask.height == 16);
  double covered = 0;
  for (Real x : mask.data) covered += x;
  CHECK(covered > 0);

  CHECK(cli({"extract", "--checkpoint", (dir / "none.g3dc").string(), "--out", (dir / "x.obj").string()}).code !=
        kExitOk);
  CHECK(cli({"render", "--checkpoint", ckpt.string(), "--camera-file", (dir / "none.json").string(), "--out-dir",
             (dir / "r2").string()})
            .code == kExitConfig);
}

TEST_CASE("fuse-debug prints per-view weights") {
  const std::string bundle = g3d_test::fixture_bundle_dir().string();
  const CliResult r = cli({"fuse-debug", "--bundle", bundle, "--point", "0,0.2,0.1", "--reference", "2"});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  CHECK(r.out.find("reference=2 views=3") != std::string::npos);
  for (const char* line : {"view 1 valid=1", "view 2 valid=1", "view 3 valid=1", "fused channels=256"})
    CHECK_MESSAGE(r.out.find(line) != std::string::npos, line);
  // The reference view always has weight 1.
  CHECK(r.out.find("view 2 valid=1") != std::string::npos);
  const auto at = r.out.find("view 2 valid=1");
  const auto w = r.out.find("weight=", at);
  CHECK(std::stod(r.out.substr(w + 7)) == doctest::Approx(1));

  CHECK(cli({"fuse-debug", "--bundle", bundle, "--point", "0,0,0", "--reference", "4"}).code == kExitConfig);
  CHECK(cli({"fuse-debug", "--bundle", bundle, "--point", "0,0"}).code == kExitConfig);
}

TEST_CASE("optimize writes the run directory") {
  TempDir dir;
  g3d_test::write_text(dir / "run.cfg", g3d_test::tiny_config_text(dir / "out", 4));
  const CliResult r = cli({"optimize", "--config", (dir / "run.cfg").string(), "--seed", "9"});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  for (const char* name : {"losses.log", "mesh_high.obj", "mesh_low.obj", "checkpoint.g3dc", "checkpoint_3.g3dc",
                           "renders/view_1.png", "renders/view_3_mask.png"})
    CHECK_MESSAGE(std::filesystem::exists(dir / "out" / name), name);
  std::istringstream log(g3d_test::read_text(dir / "out" / "losses.log"));
  int lines = 0;
  for (std::string line; std::getline(log, line);) {
    CHECK(line.rfind("step=" + std::to_string(lines) + " ", 0) == 0);
    ++lines;
  }
  CHECK(lines == 4);
  const Image render = read_png(dir / "out" / "renders" / "view_1.png");
  CHECK(render.width == 32);
}

}  // TEST_SUITE
