#include "doctest.h"

#include "critique/time.hpp"

using namespace critique;

TEST_CASE("timestamps parse in the accepted ISO forms and normalize to UTC") {
  const Timestamp base = parse_timestamp("2021-03-04T05:06:07Z");
  CHECK(format_timestamp(base) == "2021-03-04T05:06:07Z");
  CHECK(parse_timestamp("2021-03-04") == base - hours(5) - minutes(6) - Duration{7});
  CHECK(parse_timestamp("2021-03-04 05:06:07") == base);
  CHECK(parse_timestamp("2021-03-04T05:06") == base - Duration{7});
  CHECK(parse_timestamp("2021-03-04T05:06:07.999Z") == base);
  CHECK(parse_timestamp("2021-03-04T07:06:07+02:00") == base);
  CHECK(parse_timestamp("2021-03-04T03:36:07-0130") == base);
}

TEST_CASE("malformed timestamps are rejected") {
  for (const char* bad : {"", "2021", "2021-13-01", "2021-02-30", "2021-01-01T25:00", "2021-01-01Tab", "2021-01-01Z?"})
    CHECK_THROWS_AS(parse_timestamp(bad), TimeFormatError);
}

TEST_CASE("format and parse round-trip") {
  for (std::int64_t s : {0LL, 951782400LL, 1609459199LL, 4102444800LL}) {
    const Timestamp t{Duration{s}};
    CHECK(parse_timestamp(format_timestamp(t)) == t);
  }
}

TEST_CASE("duration helpers") {
  CHECK(days(2) == hours(48));
  CHECK(to_days(hours(36)) == doctest::Approx(1.5));
}
