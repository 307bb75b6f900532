#include <gtest/gtest.h>

#include "wadapt/error.hpp"
#include "wadapt/hour_stamp.hpp"

using namespace wadapt;

TEST(HourStamp, EpochAndKnownDates) {
  EXPECT_EQ(parse_hour_stamp("1970-01-01T00:00").hours, 0);
  EXPECT_EQ(parse_hour_stamp("1970-01-02T03:00").hours, 27);
  // 2015-01-01 is 16436 days after the epoch.
  EXPECT_EQ(parse_hour_stamp("2015-01-01T00:00").hours, 16436 * 24);
}

TEST(HourStamp, AcceptsSpaceSeparatorAndSeconds) {
  EXPECT_EQ(parse_hour_stamp("2016-02-29 13:00"), parse_hour_stamp("2016-02-29T13:00:00"));
}

TEST(HourStamp, RoundTripsThroughFormat) {
  for (std::int64_t h : {0LL, 1LL, 394464LL, 394464LL + 8783LL, 500000LL}) {
    EXPECT_EQ(parse_hour_stamp(format_hour_stamp(HourStamp{h})).hours, h);
  }
}

TEST(HourStamp, RejectsMalformed) {
  for (const char* bad : {"", "2015-01-01", "2015-13-01T00:00", "2015-02-30T00:00", "2015-01-01T24:00",
                          "2015-01-01T00:30", "2015-01-01T00:00:15", "15-01-01T00:00", "2015/01/01T00:00"}) {
    try {
      parse_hour_stamp(bad);
      ADD_FAILURE() << "accepted '" << bad << "'";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::MalformedTimestamp) << bad;
    }
  }
}
