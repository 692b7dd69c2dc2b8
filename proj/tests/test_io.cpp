#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "patchseg/errors.hpp"
#include "patchseg/io.hpp"
#include "patchseg/rng.hpp"
#include "support/oracles.hpp"

using namespace patchseg;
namespace fs = std::filesystem;

namespace {

// Fresh directory per test case, removed on scope exit.
struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("patchseg_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const char* name) const { return path / name; }
};

}  // namespace

TEST_CASE("mask PNGs round trip at 8 bits") {
  TempDir dir;
  Rng rng(11);
  const SemanticMask mask =
      testsupport::random_mask(rng, 13, 9, ClassMap::from_labels({"a", "b", "c"}));
  write_mask_png(dir / "m.png", mask);
  CHECK(read_mask_png(dir / "m.png") == mask);
}

TEST_CASE("mask PNGs switch to 16 bits for large ids") {
  TempDir dir;
  SemanticMask mask(3, 4, 0);
  mask(0, 0) = 40000;
  mask(2, 3) = 256;
  write_mask_png(dir / "m.png", mask);
  CHECK(read_mask_png(dir / "m.png") == mask);
}

TEST_CASE("id PNGs round trip and reject values beyond 16 bits") {
  TempDir dir;
  Grid<std::uint32_t> ids(2, 2, 0);
  ids(0, 1) = 65535;
  write_id_png(dir / "ids.png", ids);
  CHECK(read_id_png(dir / "ids.png") == ids);

  ids(1, 0) = 65536;
  CHECK_THROWS_AS(write_id_png(dir / "ids.png", ids), DataError);
}

TEST_CASE("reading a missing or non-PNG file raises a data error") {
  TempDir dir;
  CHECK_THROWS_AS(read_mask_png(dir / "absent.png"), DataError);
  write_text_file(dir / "fake.png", "definitely not a png");
  CHECK_THROWS_AS(read_mask_png(dir / "fake.png"), DataError);
}

TEST_CASE("reading a truncated PNG raises a data error instead of crashing") {
  TempDir dir;
  SemanticMask mask(32, 32, 1);
  write_mask_png(dir / "m.png", mask);
  const std::string bytes = read_text_file(dir / "m.png");
  write_text_file(dir / "cut.png", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_mask_png(dir / "cut.png"), DataError);
}

TEST_CASE("boundary PFM files round trip exact floats") {
  TempDir dir;
  BoundaryMap map(3, 2, 0.0f);
  map(0, 0) = 0.1f;
  map(1, 1) = 1.0f / 3.0f;
  map(2, 0) = 1.0f;
  map(2, 1) = 0.999999f;
  write_boundary_pfm(dir / "b.pfm", map);
  CHECK(read_boundary(dir / "b.pfm") == map);
}

TEST_CASE("boundary PNGs quantize to the bit depth") {
  TempDir dir;
  BoundaryMap map(1, 3, 0.0f);
  map(0, 1) = 0.5f;
  map(0, 2) = 1.0f;
  write_boundary_png(dir / "b.png", map);
  const BoundaryMap back = read_boundary(dir / "b.png");
  CHECK(back(0, 0) == doctest::Approx(0.0));
  CHECK(back(0, 1) == doctest::Approx(128.0 / 255.0));  // 0.5 * 255 rounds up
  CHECK(back(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("malformed PFM headers are rejected") {
  TempDir dir;
  write_text_file(dir / "color.pfm", "PF\n2 2\n-1.0\n");
  CHECK_THROWS_AS(read_boundary(dir / "color.pfm"), DataError);
  write_text_file(dir / "bigendian.pfm", "Pf\n2 2\n1.0\n");
  CHECK_THROWS_AS(read_boundary(dir / "bigendian.pfm"), DataError);
  write_text_file(dir / "short.pfm", "Pf\n4 4\n-1.0\nxx");
  CHECK_THROWS_AS(read_boundary(dir / "short.pfm"), DataError);
}

TEST_CASE("class maps round trip through their JSON sidecar") {
  TempDir dir;
  const ClassMap cm = testsupport::awkward_class_map();
  write_class_map(dir / "classes.json", cm);
  CHECK(read_class_map(dir / "classes.json") == cm);

  write_text_file(dir / "broken.json", "{\"classes\": [{\"label\": \"x\"}]}");
  CHECK_THROWS_AS(read_class_map(dir / "broken.json"), DataError);
  write_text_file(dir / "junk.json", "not json at all");
  CHECK_THROWS_AS(read_class_map(dir / "junk.json"), DataError);
}

TEST_CASE("instance tables round trip and reject junk keys") {
  TempDir dir;
  const std::map<InstanceId, ClassId> classes{{1, 2}, {7, 1}, {40000, 3}};
  write_instance_table(dir / "t.json", classes);
  CHECK(read_instance_table(dir / "t.json") == classes);

  write_text_file(dir / "bad.json", "{\"seven\": 1}");
  CHECK_THROWS_AS(read_instance_table(dir / "bad.json"), DataError);
  write_text_file(dir / "list.json", "[1, 2]");
  CHECK_THROWS_AS(read_instance_table(dir / "list.json"), DataError);
}

TEST_CASE("instance maps round trip as PNG plus sidecar") {
  TempDir dir;
  InstanceMap im;
  im.ids = testsupport::make_ids({{0, 1, 1}, {2, 2, 0}});
  im.classes = {{1, 1}, {2, 3}};
  write_instance_map(dir / "ids.png", dir / "table.json", im);
  const InstanceMap back = read_instance_map(dir / "ids.png", dir / "table.json");
  CHECK(back.ids == im.ids);
  CHECK(back.classes == im.classes);
}

TEST_CASE("text files round trip bytes exactly") {
  TempDir dir;
  const std::string full("line one\nline two\n\ttab\0byte", 27);
  write_text_file(dir / "t.txt", full);
  CHECK(read_text_file(dir / "t.txt") == full);
  CHECK_THROWS_AS(read_text_file(dir / "absent.txt"), DataError);
}
