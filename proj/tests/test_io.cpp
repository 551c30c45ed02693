#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "oracles.hpp"
#include "rvmf/io.hpp"
#include "rvmf/vmf.hpp"

using namespace rvmf;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& content) {
    static int counter = 0;
    path = (std::filesystem::temp_directory_path() /
            ("rvmf_io_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++) + ".csv"))
               .string();
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("parse_format") {
  CHECK(io::parse_format("unit_vectors") == io::InputFormat::UnitVectors);
  CHECK(io::parse_format("angles_radians") == io::InputFormat::AnglesRadians);
  CHECK(io::parse_format("angles_degrees") == io::InputFormat::AnglesDegrees);
  CHECK(io::parse_format("raw_rows_normalize") ==
        io::InputFormat::RawRowsNormalize);
  CHECK_THROWS_AS(io::parse_format("nope"), io_error);
}

TEST_CASE("angle ingestion") {
  TempFile f("0\n1.5707963267948966\n3.141592653589793\n");
  Dataset data = io::ingest(f.path, io::InputFormat::AnglesRadians);
  REQUIRE(data.n() == 3);
  REQUIRE(data.p() == 2);
  CHECK_THAT(data.points(0, 0), Catch::Matchers::WithinRel(1.0, 1e-15));
  CHECK_THAT(data.points(0, 1), Catch::Matchers::WithinAbs(0.0, 1e-15));
  CHECK_THAT(data.points(1, 1), Catch::Matchers::WithinRel(1.0, 1e-12));
  CHECK_THAT(data.points(2, 0), Catch::Matchers::WithinRel(-1.0, 1e-12));

  // degrees variant maps 90 to (0, 1)
  TempFile g("90\n");
  Dataset deg = io::ingest(g.path, io::InputFormat::AnglesDegrees);
  CHECK_THAT(deg.points(0, 1), Catch::Matchers::WithinRel(1.0, 1e-12));

  // atan2 round trip
  TempFile h("0.29\n-2.5\n6.0\n");
  Dataset rt = io::ingest(h.path, io::InputFormat::AnglesRadians);
  for (int i = 0; i < 3; ++i) {
    const double theta = std::atan2(rt.points(i, 1), rt.points(i, 0));
    const double input = i == 0 ? 0.29 : (i == 1 ? -2.5 : 6.0);
    double diff = std::fmod(theta - input, 2.0 * M_PI);
    if (diff > M_PI) diff -= 2.0 * M_PI;
    if (diff < -M_PI) diff += 2.0 * M_PI;
    CHECK_THAT(diff, Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("raw row normalisation") {
  TempFile f("1,2,3\n");
  Dataset data = io::ingest(f.path, io::InputFormat::RawRowsNormalize);
  REQUIRE(data.p() == 3);
  CHECK_THAT(data.points(0, 0),
             Catch::Matchers::WithinAbs(-0.7071068, 1e-7));
  CHECK_THAT(data.points(0, 1), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(data.points(0, 2), Catch::Matchers::WithinAbs(0.7071068, 1e-7));

  // constant row has zero centered norm
  TempFile g("2,2,2\n");
  CHECK_THROWS_AS(io::ingest(g.path, io::InputFormat::RawRowsNormalize),
                  io_error);
}

TEST_CASE("cosine similarity of normalised rows equals Pearson correlation") {
  Rng rng(81);
  const int p = 12;
  Vector a(p), b(p);
  for (int i = 0; i < p; ++i) {
    a[i] = 3.0 + 2.0 * rng.normal();
    b[i] = -1.0 + 0.5 * rng.normal() + 0.3 * a[i];
  }
  std::string csv;
  for (const Vector* v : {&a, &b}) {
    for (int i = 0; i < p; ++i) {
      if (i) csv += ',';
      csv += io::format_double((*v)[i]);
    }
    csv += '\n';
  }
  TempFile f(csv);
  Dataset data = io::ingest(f.path, io::InputFormat::RawRowsNormalize);
  const double cosine = data.points.row(0).dot(data.points.row(1));

  const double ma = a.mean(), mb = b.mean();
  const Vector ca = a.array() - ma, cb = b.array() - mb;
  const double pearson = ca.dot(cb) / (ca.norm() * cb.norm());
  CHECK_THAT(cosine, Catch::Matchers::WithinAbs(pearson, 1e-10));
}

TEST_CASE("unit vector validation") {
  // slight off-norm within tolerance: renormalised
  TempFile ok("1.0000001,0\n");
  Dataset data = io::ingest(ok.path, io::InputFormat::UnitVectors);
  CHECK_THAT(data.points.row(0).norm(),
             Catch::Matchers::WithinRel(1.0, 1e-15));

  // far off-norm: rejected with the row index in the message
  TempFile bad("1,0\n0.9,0\n");
  try {
    io::ingest(bad.path, io::InputFormat::UnitVectors);
    FAIL("expected io_error");
  } catch (const io_error& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("CSV error reporting") {
  TempFile malformed("1,0\n1,zebra\n");
  CHECK_THROWS_AS(io::read_csv(malformed.path), io_error);

  TempFile ragged("1,0\n1\n");
  CHECK_THROWS_AS(io::read_csv(ragged.path), io_error);

  TempFile nonfinite("1,0\nnan,0\n");
  CHECK_THROWS_AS(io::read_csv(nonfinite.path), io_error);

  TempFile empty("");
  CHECK_THROWS_AS(io::read_csv(empty.path), io_error);

  CHECK_THROWS_AS(io::read_csv("/nonexistent/path.csv"), io_error);

  // header skipping
  TempFile header("theta\n0.5\n");
  CHECK_THROWS_AS(io::read_csv(header.path), io_error);
  CHECK(io::read_csv(header.path, true).size() == 1);
}

TEST_CASE("dataset CSV round trip is bit exact") {
  Vector xi(3);
  xi << 1.0, -2.0, 0.5;
  Dataset data = vmf::sample(xi, 40, 4242);
  TempFile f("");
  io::write_file_atomic(f.path, io::dataset_csv(data));
  Dataset back = io::ingest(f.path, io::InputFormat::UnitVectors);
  REQUIRE(back.n() == data.n());
  // %.17g serialisation preserves doubles exactly
  CHECK(back.points == data.points);
}

TEST_CASE("atomic write leaves no temp file behind") {
  TempFile f("");
  io::write_file_atomic(f.path, "hello\n");
  CHECK(!std::filesystem::exists(f.path + ".tmp"));
  std::ifstream in(f.path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "hello");
}
