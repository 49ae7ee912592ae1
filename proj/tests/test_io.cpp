#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lgcpd/error.hpp"
#include "lgcpd/io.hpp"

using namespace lgcpd;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "lgcpd_io_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("mask file round trip") {
  const auto path = (temp_dir() / "mask.txt").string();
  {
    std::ofstream out(path);
    out << "2 2 2 0 10 0 5 1990 2000\n1 0 1 1\n0 0 1 1\n";
  }
  const auto d = load_mask_file(path);
  CHECK(d.bounds().hi[0] == 10);
  CHECK(d.bounds().lo[2] == 1990);
  CHECK(d.mask()->admissible_count() == 5);
  CHECK_FALSE(d.is_admissible({7, 1, 1991}));
  CHECK(d.is_admissible({2, 1, 1991}));
  const auto copy = (temp_dir() / "mask2.txt").string();
  save_mask_file(copy, d);
  CHECK(load_mask_file(copy).mask()->cells() == d.mask()->cells());
}

TEST_CASE("malformed and missing masks are I/O errors") {
  auto code = [](const std::string& path) {
    try {
      load_mask_file(path);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Usage;
  };
  CHECK(code((temp_dir() / "does_not_exist.txt").string()) == ErrorCode::Io);
  const auto bad = (temp_dir() / "bad.txt").string();
  std::ofstream(bad) << "2 2 2 0 1 0 1 0 1\n1 0 1\n";
  CHECK(code(bad) == ErrorCode::Io);
  std::ofstream(bad) << "1 1 1 0 1 0 1 0 1\n0\n";
  CHECK(code(bad) == ErrorCode::Io);
  std::ofstream(bad) << "1 1 1 0 1 0 1 0 1\n2\n";
  CHECK(code(bad) == ErrorCode::Io);
}

TEST_CASE("design CSV and provenance round trip") {
  DesignRequest req;
  req.generator = "min_dran";
  req.n = 25;
  req.seed = 99;
  const auto d = generate_design(req, Domain::unit_cube());
  const auto path = (temp_dir() / "design.csv").string();
  save_design(path, d);
  const auto back = load_design(path);
  CHECK(back.points == d.points);
  CHECK(back.provenance.generator == "min_dran");
  CHECK(back.provenance.seed == 99);
  CHECK(back.provenance.params.at("delta") == d.provenance.params.at("delta"));
  CHECK(back.provenance.accepted == d.provenance.accepted);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "s1,s2,t");
}

TEST_CASE("design CSV errors") {
  const auto path = (temp_dir() / "broken.csv").string();
  std::ofstream(path) << "x,y,z\n1,2,3\n";
  CHECK_THROWS_AS(load_design(path), Error);
  std::ofstream(path) << "s1,s2,t\n1,2\n";
  CHECK_THROWS_AS(load_design(path), Error);
  std::ofstream(path) << "s1,s2,t\n1,abc,3\n";
  CHECK_THROWS_AS(load_design(path), Error);
}

TEST_CASE("comparison CSV layout") {
  Comparison c;
  ComparisonRow base;
  base.design_name = "halton";
  base.estimate.criterion = Criterion::ApvIntensity;
  base.estimate.value = 2.5;
  base.estimate.std_error = 0.25;
  base.estimate.replicate_count = 50;
  ComparisonRow rej = base;
  rej.design_name = "halton_rej";
  rej.estimate.value = 2.0;
  rej.reduction_vs_base_pct = 20.0;
  c.rows = {base, rej};
  std::ostringstream os;
  write_comparison_csv(os, c);
  CHECK(os.str() ==
        "design_name,criterion,estimate,std_error,M,reduction_vs_base_pct\n"
        "halton,apv_intensity,2.5,0.25,50,\n"
        "halton_rej,apv_intensity,2,0.25,50,20\n");
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
}
