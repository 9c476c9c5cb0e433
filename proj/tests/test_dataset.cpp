#include <catch2/catch_amalgamated.hpp>

#include "cbal/dataset.hpp"
#include "test_util.hpp"

using namespace cbal;

static Schema toy_schema() {
  Schema s;
  s.group = "g";
  s.cluster = "h";
  s.outcomes = {"y"};
  s.covariates = {"x1", "x2"};
  return s;
}

TEST_CASE("load_dataset parses a small clustered CSV") {
  auto path = testutil::write_file("toy4.csv",
                                   "g,h,y,x1,x2\n"
                                   "1,a,0.5,1,2\n"
                                   "0,a,0.25,3,4\n"
                                   "1,b,1.5,5,6\n"
                                   "0,b,2.5,7,8\n");
  AnalysisDataset ds = load_dataset(path, toy_schema());
  REQUIRE(ds.n_rows() == 4);
  REQUIRE(ds.covariates.cols() == 2);
  REQUIRE(ds.n_clusters() == 2);
  REQUIRE(ds.n_focal() == 2);
  REQUIRE(ds.n_comparison() == 2);
  CHECK(ds.cluster_labels[0] == "a");  // first-appearance interning
  CHECK(ds.cluster[3] == 1);
  CHECK(ds.outcome("y")(2) == 1.5);
}

TEST_CASE("load_dataset rejects a non-binary group value with the row index") {
  auto path = testutil::write_file("badgroup.csv",
                                   "g,h,y,x1,x2\n"
                                   "1,a,0.5,1,2\n"
                                   "0,a,0.25,3,4\n"
                                   "2,b,1.5,5,6\n");
  try {
    load_dataset(path, toy_schema());
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("load_dataset reports missing mapped columns by name") {
  auto path = testutil::write_file("nocol.csv", "g,y,x1\n1,0.5,1\n");
  Schema s = toy_schema();
  try {
    load_dataset(path, s);
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Schema);
    CHECK(std::string(e.what()).find("h") != std::string::npos);
  }
}

TEST_CASE("load_dataset rejects missing cells") {
  auto path = testutil::write_file("nacell.csv",
                                   "g,h,y,x1,x2\n"
                                   "1,a,0.5,1,\n");
  CHECK_THROWS_AS(load_dataset(path, toy_schema()), Error);
}

TEST_CASE("unclustered mode when no cluster column is mapped") {
  auto path = testutil::write_file("noclust.csv",
                                   "g,y,x1,x2\n"
                                   "1,0.5,1,2\n"
                                   "0,0.25,3,4\n");
  Schema s = toy_schema();
  s.cluster.reset();
  AnalysisDataset ds = load_dataset(path, s);
  CHECK_FALSE(ds.clustered());
  CHECK(ds.n_clusters() == 0);
}

TEST_CASE("ingestion round-trip is bitwise exact") {
  auto rng = std::mt19937_64(7);
  std::normal_distribution<double> norm;
  std::string csv = "g,h,y,x1,x2\n";
  for (int i = 0; i < 50; ++i) {
    csv += std::to_string(i % 2) + ",c" + std::to_string(i % 3) + "," +
           cbal::format_double(norm(rng)) + "," + cbal::format_double(norm(rng) * 1e-7) + "," +
           cbal::format_double(norm(rng) * 1e9) + "\n";
  }
  auto path = testutil::write_file("roundtrip_in.csv", csv);
  AnalysisDataset ds = load_dataset(path, toy_schema());
  auto out_path = (testutil::temp_dir() / "roundtrip_out.csv").string();
  save_dataset(ds, out_path, toy_schema());
  AnalysisDataset ds2 = load_dataset(out_path, toy_schema());
  REQUIRE(ds2.n_rows() == ds.n_rows());
  CHECK(ds2.covariates == ds.covariates);
  CHECK(ds2.outcomes[0] == ds.outcomes[0]);
  CHECK(ds2.group == ds.group);
  CHECK(ds2.cluster == ds.cluster);
}

TEST_CASE("top_code_outcome caps outcomes and reports the affected fraction") {
  auto path = testutil::write_file("topcode.csv",
                                   "g,y,x1,x2\n"
                                   "1,5,0,0\n"
                                   "0,45,0,1\n"
                                   "1,30,1,0\n");
  Schema s = toy_schema();
  s.cluster.reset();
  AnalysisDataset ds = load_dataset(path, s);

  auto r = top_code_outcome(ds, "y", 30.0);
  CHECK(r.dataset.outcome("y")(0) == 5.0);
  CHECK(r.dataset.outcome("y")(1) == 30.0);
  CHECK(r.dataset.outcome("y")(2) == 30.0);
  CHECK(r.fraction_affected == Catch::Approx(1.0 / 3.0));

  auto unchanged = top_code_outcome(ds, "y", 100.0);
  CHECK(unchanged.fraction_affected == 0.0);
  CHECK(unchanged.dataset.outcome("y") == ds.outcome("y"));

  CHECK_THROWS_AS(top_code_outcome(ds, "y", std::numeric_limits<double>::infinity()), Error);
}
