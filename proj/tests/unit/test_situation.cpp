#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "crahn/error.hpp"
#include "crahn/rng.hpp"
#include "crahn/situation.hpp"

using namespace crahn;

namespace {

const char* kGolden =
    R"(<situation><location x="120.500" y="88.000"/><status>red</status>)"
    R"(<timestamp>42.125</timestamp><short>help</short><detail>trapped under debris</detail></situation>)";

SituationRecord golden_record() {
  return SituationRecord{{120.5, 88.0}, SituationStatus::Red, SimTime::from_ms(42125), "help",
                         "trapped under debris"};
}

ErrorCode parse_error(const std::string& xml) {
  try {
    parse_situation(xml);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parsed: " << xml;
  return ErrorCode::PreconditionViolation;
}

std::string random_text(RngStream& rng) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,;:!?-_/<>&\"'";
  std::string s;
  const auto n = rng.below(40);
  for (std::uint64_t i = 0; i < n; ++i) s += alphabet[rng.below(alphabet.size())];
  return s;
}

}  // namespace

TEST(SituationXml, GoldenEncoding) {
  EXPECT_EQ(encode_situation(golden_record()), kGolden);
  EXPECT_EQ(parse_situation(kGolden), golden_record());
}

TEST(SituationXml, EscapesMarkup) {
  SituationRecord rec = golden_record();
  rec.short_msg = "a<b & \"c\"";
  const auto xml = encode_situation(rec);
  EXPECT_NE(xml.find("a&lt;b &amp; &quot;c&quot;"), std::string::npos);
  EXPECT_EQ(parse_situation(xml), rec);
}

TEST(SituationXmlProperty, RandomRecordsRoundTrip) {
  RngStream rng(1, "xml");
  for (int i = 0; i < 1000; ++i) {
    SituationRecord rec;
    // Coordinates on the 1 mm grid the encoding carries.
    rec.location = {std::round(rng.uniform(-1000, 2000) * 1000) / 1000,
                    std::round(rng.uniform(-1000, 2000) * 1000) / 1000};
    rec.status = static_cast<SituationStatus>(rng.below(3));
    rec.timestamp = SimTime::from_ms(static_cast<std::int64_t>(rng.below(10'000'000)));
    rec.short_msg = random_text(rng);
    rec.detail_msg = random_text(rng);
    const auto xml = encode_situation(rec);
    const auto back = parse_situation(xml);
    ASSERT_EQ(back, rec) << xml;
    ASSERT_EQ(encode_situation(back), xml);
  }
}

TEST(SituationXml, UnknownStatusRejected) {
  std::string xml = kGolden;
  xml.replace(xml.find("red"), 3, "blue");
  EXPECT_EQ(parse_error(xml), ErrorCode::XmlInvalidStatus);
  EXPECT_THROW(parse_status("Red"), Error);
  EXPECT_EQ(parse_status("yellow"), SituationStatus::Yellow);
}

TEST(SituationXml, MalformedInputRejected) {
  EXPECT_EQ(parse_error(""), ErrorCode::XmlMalformed);
  EXPECT_EQ(parse_error("<situation>"), ErrorCode::XmlMalformed);
  std::string truncated = kGolden;
  truncated.pop_back();
  EXPECT_EQ(parse_error(truncated), ErrorCode::XmlMalformed);
  std::string reordered = kGolden;
  reordered.replace(reordered.find("<short>help</short>"), 19, "");
  EXPECT_EQ(parse_error(reordered), ErrorCode::XmlMalformed);
  EXPECT_EQ(parse_error(std::string(kGolden) + "x"), ErrorCode::XmlMalformed);
  std::string bad_number = kGolden;
  bad_number.replace(bad_number.find("42.125"), 6, "4x.125");
  EXPECT_EQ(parse_error(bad_number), ErrorCode::XmlMalformed);
}

TEST(SituationStore, DeduplicatesAndQueriesNewestFirst) {
  SituationStore store;
  auto rec = golden_record();
  EXPECT_TRUE(store.insert(1, rec));
  EXPECT_FALSE(store.insert(1, rec));
  EXPECT_TRUE(store.insert(2, rec));
  auto later = rec;
  later.timestamp = SimTime::from_ms(50000);
  later.status = SituationStatus::Green;
  EXPECT_TRUE(store.insert(1, later));
  EXPECT_EQ(store.size(), 3u);
  const auto all = store.query();
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].timestamp, SimTime::from_ms(50000));
  EXPECT_EQ(store.query(SituationStatus::Red).size(), 2u);
  EXPECT_EQ(store.query(std::nullopt, SimTime::from_ms(45000)).size(), 1u);
}
