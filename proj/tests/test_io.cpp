#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "hdrisk/errors.hpp"
#include "hdrisk/io.hpp"
#include "hdrisk/selftest.hpp"

using namespace hdrisk;

TEST_SUITE("io") {

TEST_CASE("dataset round trip is exact") {
  const Dataset d = random_instance(12, 4, 2, 1);
  std::stringstream ss;
  write_dataset_csv(ss, d);
  const std::string text = ss.str();
  CHECK(text.rfind(kDatasetHeaderComment, 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  const Dataset back = read_dataset_csv(ss);
  CHECK(back.X == d.X);
  CHECK(back.y == d.y);
}

TEST_CASE("dataset parsing") {
  std::istringstream plain("1,2,3\n4,5,6\r\n\n# note\n7,8,9\n");
  const Dataset d = read_dataset_csv(plain);
  CHECK(d.n() == 3);
  CHECK(d.p() == 2);
  CHECK(d.y[2] == 7.0);
  CHECK(d.X(1, 1) == 6.0);

  std::istringstream ragged("y,x1\n1,2\n3\n");
  CHECK_THROWS_AS(read_dataset_csv(ragged), ValidationError);
  std::istringstream words("y,x1\n1,abc\n");
  CHECK_THROWS_AS(read_dataset_csv(words), ValidationError);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(read_dataset_csv(empty), ValidationError);
  std::istringstream one_col("1\n2\n");
  CHECK_THROWS_AS(read_dataset_csv(one_col), ValidationError);
  std::istringstream nan_entry("1,nan\n");
  CHECK_THROWS_AS(read_dataset_csv(nan_entry), ValidationError);
  CHECK_THROWS_AS(read_dataset_csv(std::string("/nonexistent/file.csv")), Error);
}

TEST_CASE("csv quoting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("double formatting round-trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, 5e-324}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
}

}
