#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nbp/errors.hpp"
#include "nbp/instance.hpp"

using namespace nbp;

TEST_SUITE_BEGIN("instance");

TEST_CASE("generated coefficients stay inside the family ranges") {
  const int n = 20, m = 20;
  const BilevelInstance inst = generate_instance(n, m, LowerKind::Continuous, 7);
  const double delta = 200.0 / (m + n);
  CHECK(delta == doctest::Approx(5.0));
  CHECK(inst.c.minCoeff() >= -50.0);
  CHECK(inst.c.maxCoeff() <= 50.0);
  CHECK(inst.d1.minCoeff() >= -50.0);
  CHECK(inst.d1.maxCoeff() <= 50.0);
  CHECK(inst.A1.minCoeff() >= -2.0 * delta);
  CHECK(inst.A1.maxCoeff() <= 2.0 * delta);
  CHECK(inst.b1.minCoeff() >= 30.0);
  CHECK(inst.b1.maxCoeff() <= 130.0);
  CHECK(inst.A2.minCoeff() >= -10.0 * delta);
  CHECK(inst.A2.maxCoeff() <= 10.0 * delta);
  CHECK(inst.B2.minCoeff() >= -delta);
  CHECK(inst.B2.maxCoeff() <= delta);
  CHECK(inst.b2.minCoeff() >= 10.0);
  CHECK(inst.b2.maxCoeff() <= 110.0);
  CHECK((inst.y_upper.array() == 1.0).all());
  CHECK(validate_instance(inst).empty());
}

TEST_CASE("generated upper and lower objectives on y coincide") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const BilevelInstance inst = generate_instance(10, 20, LowerKind::Integer, seed);
    CHECK(inst.d1 == inst.d2);
  }
}

TEST_CASE("generation is deterministic in the seed") {
  const BilevelInstance a = generate_instance(6, 9, LowerKind::Continuous, 42);
  const BilevelInstance b = generate_instance(6, 9, LowerKind::Continuous, 42);
  CHECK(a.c == b.c);
  CHECK(a.A1 == b.A1);
  CHECK(a.A2 == b.A2);
  CHECK(a.B2 == b.B2);
  CHECK(a.b1 == b.b1);
  CHECK(a.b2 == b.b2);
  const BilevelInstance c = generate_instance(6, 9, LowerKind::Continuous, 43);
  CHECK(a.c != c.c);
}

TEST_CASE("validate_instance pinpoints defects") {
  BilevelInstance inst = generate_instance(4, 5, LowerKind::Continuous, 1);
  CHECK(validate_instance(inst).empty());

  SUBCASE("wrong A2 row count") {
    inst.A2 = Eigen::MatrixXd::Zero(inst.m + 1, inst.n);
    const auto issues = validate_instance(inst);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].find("A2") != std::string::npos);
  }
  SUBCASE("negative y_upper entry") {
    inst.y_upper(2) = -1.0;
    const auto issues = validate_instance(inst);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].find("y_upper") != std::string::npos);
  }
}

TEST_CASE("instance json roundtrip is exact") {
  const BilevelInstance inst = generate_instance(5, 7, LowerKind::Integer, 99);
  const auto path = std::filesystem::temp_directory_path() / "nbp_inst_roundtrip.json";
  save_instance(inst, path.string());
  const BilevelInstance back = load_instance(path.string());
  CHECK(back.n == inst.n);
  CHECK(back.m == inst.m);
  CHECK(back.lower_kind == inst.lower_kind);
  CHECK(back.c == inst.c);
  CHECK(back.d1 == inst.d1);
  CHECK(back.d2 == inst.d2);
  CHECK(back.A1 == inst.A1);
  CHECK(back.b1 == inst.b1);
  CHECK(back.A2 == inst.A2);
  CHECK(back.B2 == inst.B2);
  CHECK(back.b2 == inst.b2);
  CHECK(back.y_upper == inst.y_upper);
  std::filesystem::remove(path);
}

TEST_CASE("missing field names the culprit") {
  const BilevelInstance inst = generate_instance(3, 4, LowerKind::Continuous, 5);
  std::ostringstream buf;
  write_instance(inst, buf);
  std::string text = buf.str();
  const auto pos = text.find("\"b2\"");
  REQUIRE(pos != std::string::npos);
  const auto end = text.find("]", pos);
  text.erase(pos, end - pos + 2);
  std::istringstream in(text);
  try {
    read_instance(in);
    FAIL("expected ParseError");
  } catch (const ParseError& err) {
    CHECK(std::string(err.what()).find("b2") != std::string::npos);
  }
}

TEST_CASE("lower_kind parses the documented spellings") {
  const BilevelInstance inst = generate_instance(3, 4, LowerKind::Integer, 5);
  std::ostringstream buf;
  write_instance(inst, buf);
  CHECK(buf.str().find("\"Integer\"") != std::string::npos);
  std::istringstream in(buf.str());
  CHECK(read_instance(in).lower_kind == LowerKind::Integer);
  CHECK_THROWS_AS(lower_kind_from_string("milp"), ParseError);
}

TEST_SUITE_END();
