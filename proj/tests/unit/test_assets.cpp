#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "../common/temp_dir.hpp"
#include "g3d/bundle.hpp"
#include "g3d/camera_file.hpp"
#include "g3d/checkpoint.hpp"
#include "g3d/envmap_io.hpp"
#include "g3d/error.hpp"
#include "g3d/image_io.hpp"
#include "g3d/obj_io.hpp"
#include "g3d/pafm.hpp"
#include "g3d/run_config.hpp"

using namespace g3d;
using g3d_test::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kInvalidArgument;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

Image random_image(int w, int h, int c, std::uint64_t seed) {
  Image im(w, h, c);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  for (Real& x : im.data) x = Real(u(rng)) / 255;  // exactly representable in 8 bits
  return im;
}

}  // namespace

TEST_SUITE("assets-io") {

TEST_CASE("pafm layout and round trip") {
  FeatureMap one(1, 1, 1, Real(0.5));
  const auto bytes = write_pafm(one);
  REQUIRE(bytes.size() == 24);
  CHECK(std::memcmp(bytes.data(), "PAFM", 4) == 0);
  CHECK(bytes[4] == 1);  // version, little-endian
  float v;
  std::memcpy(&v, bytes.data() + 20, 4);
  CHECK(v == 0.5f);

  FeatureMap m(5, 3, 7);
  std::mt19937_64 rng(1);
  std::normal_distribution<float> nd;
  for (Real& x : m.data) x = Real(nd(rng));
  const FeatureMap back = read_pafm(write_pafm(m));
  CHECK(back.width == 5);
  CHECK(back.height == 3);
  CHECK(back.channels == 7);
  CHECK(back.data == m.data);

  auto b = write_pafm(m);
  CHECK(code_of([&] { read_pafm(std::span(b.data(), b.size() - 1)); }) == ErrorCode::kTruncated);
  CHECK(code_of([&] { read_pafm(std::span(b.data(), 10)); }) == ErrorCode::kTruncated);
  auto longer = b;
  longer.push_back(0);
  CHECK(code_of([&] { read_pafm(longer); }) == ErrorCode::kSizeMismatch);
  auto bad = b;
  bad[0] = 'X';
  CHECK(code_of([&] { read_pafm(bad); }) == ErrorCode::kBadMagic);
  auto ver = b;
  ver[4] = 9;
  CHECK(code_of([&] { read_pafm(ver); }) == ErrorCode::kVersionMismatch);

  TempDir dir;
  save_pafm(dir / "m.pafm", m);
  CHECK(load_pafm(dir / "m.pafm").data == m.data);
  CHECK(code_of([&] { load_pafm(dir / "missing.pafm"); }) == ErrorCode::kMissingFile);
}

TEST_CASE("obj export") {
  const std::string empty = format_obj(TriMesh{});
  CHECK(empty.find("\nv ") == std::string::npos);
  CHECK(empty.find("\nf ") == std::string::npos);
  CHECK(empty.rfind("#", 0) == 0);

  TriMesh tri;
  tri.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  tri.triangles = {{0, 1, 2}};
  tri.normals = {{0, 0, 1}, {0, 0, 1}, {0, 0, 1}};
  const std::string text = format_obj(tri);
  int v = 0, vn = 0, f = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    v += line.rfind("v ", 0) == 0;
    vn += line.rfind("vn ", 0) == 0;
    f += line.rfind("f ", 0) == 0;
  }
  CHECK(v == 3);
  CHECK(vn == 3);
  CHECK(f == 1);
  CHECK(text.find("f 1//1 2//2 3//3") != std::string::npos);

  // Byte-stable round trip.
  TriMesh m;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 20; ++i) {
    m.positions.push_back({Real(nd(rng)), Real(nd(rng)), Real(nd(rng))});
    m.normals.push_back(normalize(Vec3{Real(nd(rng)), Real(nd(rng)), Real(nd(rng))}));
  }
  for (std::uint32_t i = 0; i + 2 < 20; ++i) m.triangles.push_back({i, i + 1, i + 2});
  const std::string once = format_obj(m);
  const TriMesh parsed = parse_obj(once);
  CHECK(parsed.triangles == m.triangles);
  CHECK(format_obj(parsed) == once);
  for (std::size_t i = 0; i < m.positions.size(); ++i)
    for (int d = 0; d < 3; ++d) CHECK(parsed.positions[i][d] == doctest::Approx(m.positions[i][d]).epsilon(1e-7));

  TempDir dir;
  export_obj(m, dir / "m.obj");
  CHECK(g3d_test::read_text(dir / "m.obj") == once);
  CHECK(import_obj(dir / "m.obj").triangles == m.triangles);
}

TEST_CASE("png round trip") {
  for (int c : {1, 3}) {
    const Image im = random_image(7, 5, c, 10 + c);
    const Image back = decode_png(encode_png(im));
    CHECK(back.channels == c);
    CHECK(back.width == 7);
    CHECK(back.height == 5);
    for (std::size_t i = 0; i < im.data.size(); ++i) CHECK(std::abs(back.data[i] - im.data[i]) < 1e-6);
  }
  const Image rgb = decode_png(encode_png(random_image(4, 4, 1, 2)), 3);
  CHECK(rgb.channels == 3);
  CHECK(rgb.at(1, 2, 0) == rgb.at(1, 2, 2));
  Image over(2, 2, 1, Real(1.7));
  CHECK(decode_png(encode_png(over)).data[0] == 1);
  const Image q = quantize8(Image(1, 1, 1, Real(0.5)));
  CHECK(q.data[0] == doctest::Approx(128.0 / 255));  // 127.5 rounds up
  Image d(4, 2, 1);
  d.data = {0, 1, 2, 3, 4, 5, 6, 7};
  const Image dd = downsample(d, 2);
  CHECK(dd.width == 2);
  CHECK(dd.data[0] == doctest::Approx(2.5));
  CHECK(dd.data[1] == doctest::Approx(4.5));
  CHECK_THROWS_AS(decode_png(std::vector<std::uint8_t>{1, 2, 3}), Error);
}

TEST_CASE("supervision bundle layout") {
  TempDir dir;
  SupervisionBundle b;
  for (int k = 0; k < 6; ++k) {
    b.images.push_back(random_image(8, 8, 3, 20 + k));
    b.alphas.push_back(random_image(8, 8, 1, 30 + k));
  }
  save_bundle(b, dir.path());
  CHECK(std::filesystem::exists(dir / "view_1.png"));
  CHECK(std::filesystem::exists(dir / "view_6_alpha.png"));
  const SupervisionBundle back = load_bundle(dir.path());
  CHECK(back.view_count() == 6);
  CHECK_FALSE(back.has_hed());
  CHECK(back.images[4].data == b.images[4].data);
  CHECK(back.alphas[2].channels == 1);

  std::filesystem::remove(dir / "view_3_alpha.png");
  const std::string msg = message_of([&] { load_bundle(dir.path()); });
  CHECK(msg.find("view_3_alpha") != std::string::npos);

  TempDir hed_dir;
  b.hed.assign(6, Image(8, 8, 1, Real(0.2)));
  save_bundle(b, hed_dir.path());
  CHECK(load_bundle(hed_dir.path()).has_hed());
  std::filesystem::remove(hed_dir / "view_2_hed.png");
  CHECK_THROWS_AS(load_bundle(hed_dir.path()), Error);

  TempDir empty;
  CHECK_THROWS_AS(load_bundle(empty.path()), Error);
}

TEST_CASE("camera file") {
  std::vector<CameraSpec> cams(2);
  cams[0] = {30, 10, 2.5, 45, 64, 32, 1};
  cams[1] = {-90, 0, 3, 40, 512, 512, 0};
  const std::string text = format_camera_file(cams);
  CHECK(text.find("\"novel\"") != std::string::npos);
  const auto back = parse_camera_file(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].azimuth_deg == 30);
  CHECK(back[0].height == 32);
  CHECK(back[0].tag == 1);
  CHECK(back[1].tag == 0);
  const CameraView v = back[0].view();
  CHECK(norm(v.position()) == doctest::Approx(2.5));
  CHECK_THROWS_AS(parse_camera_file("{not json"), Error);
  CHECK_THROWS_AS(parse_camera_file(R"([{"azimuth_deg": 0}])"), Error);
  CHECK_THROWS_AS(parse_camera_file(
                      R"([{"azimuth_deg":0,"elevation_deg":0,"radius":3,"fov_deg":40,"width":8,"height":8,"tag":"x"}])"),
                  Error);
}

TEST_CASE("environment map containers") {
  EnvMapData env;
  env.layout = {4, 2};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0, 3);
  for (std::size_t i = 0; i < env.layout.value_count(); ++i) env.texels.push_back(Real(u(rng)));
  const EnvMapData back = decode_envmap(encode_envmap(env));
  CHECK(back.layout.width == 4);
  CHECK(back.layout.height == 2);
  CHECK(back.texels == env.texels);
  auto bytes = encode_envmap(env);
  bytes.pop_back();
  CHECK(code_of([&] { decode_envmap(bytes); }) == ErrorCode::kTruncated);

  TempDir dir;
  save_envmap(dir / "env.g3de", env);
  CHECK(load_envmap(dir / "env.g3de").texels == env.texels);
  save_envmap(dir / "env.png", env);
  const EnvMapData ldr = load_envmap(dir / "env.png");
  for (std::size_t i = 0; i < env.texels.size(); ++i)
    CHECK(ldr.texels[i] == doctest::Approx(std::min<Real>(env.texels[i], 1)).epsilon(0.01));
}

TEST_CASE("checkpoint container") {
  Checkpoint c;
  c.set("a", {1, 2, 3});
  c.set("b/c", {});
  c.set("a", {4});
  REQUIRE(c.sections.size() == 2);
  CHECK(c.find("a")->data == std::vector<float>{4});
  CHECK(c.find("zz") == nullptr);
  const Checkpoint d = decode_checkpoint(encode_checkpoint(c));
  REQUIRE(d.sections.size() == 2);
  CHECK(d.sections[1].name == "b/c");
  auto bytes = encode_checkpoint(c);
  bytes.resize(bytes.size() - 2);
  CHECK(code_of([&] { decode_checkpoint(bytes); }) == ErrorCode::kTruncated);
  bytes[0] = 'Z';
  CHECK(code_of([&] { decode_checkpoint(bytes); }) == ErrorCode::kBadMagic);
}

TEST_CASE("run configuration text") {
  RunConfig c;
  c.seed = 42;
  c.weights.hed = 0.5;
  c.geometry_encoder.levels = 8;
  c.prompt = "a person in a blue shirt";
  c.symmetric_masks = true;
  c.features = "builtin";
  const std::string text = format_run_config(c);
  CHECK(format_run_config(parse_run_config(text)) == text);
  const RunConfig back = parse_run_config(text);
  CHECK(back.seed == 42);
  CHECK(back.weights.hed == 0.5);
  CHECK(back.geometry_encoder.levels == 8);
  CHECK(back.prompt == "a person in a blue shirt");

  const RunConfig p = parse_run_config("# comment\n  seed = 7  # trailing\n\niterations=3\n");
  CHECK(p.seed == 7);
  CHECK(p.iterations == 3);
  CHECK(p.low_resolution == 64);

  const RunConfig rel = parse_run_config("bundle = data/b\nfeatures = file:feat\ntemplate = mesh:m.obj\n", "/x/y");
  CHECK(rel.bundle == "/x/y/data/b");
  CHECK(rel.features == "file:/x/y/feat");
  CHECK(rel.shape == "mesh:/x/y/m.obj");

  for (const char* bad : {"nope = 1\n", "seed = 1\nseed = 2\n", "seed\n", "seed = abc\n", "iterations = 1.5\n",
                          "lambda_hed = -1\n", "low_resolution = 0\n", "specular = maybe\n",
                          "camera_fov_deg = 180\n", "t_min = 0.9\n"})
    CHECK_MESSAGE(code_of([&] { parse_run_config(bad); }) == ErrorCode::kConfig, bad);
  CHECK(code_of([] { load_run_config("/nonexistent/run.cfg"); }) == ErrorCode::kConfig);
}

}  // TEST_SUITE
