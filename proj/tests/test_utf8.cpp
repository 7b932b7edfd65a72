#include <gtest/gtest.h>

#include <gujian/utf8.hpp>

using namespace gujian;

TEST(Utf8, RoundTripsMixedWidths) {
  const std::u32string s = U"a¢€𠀀三人行";
  EXPECT_EQ(utf8::decode(utf8::encode(s)), s);
  EXPECT_EQ(utf8::encode(U'雲'), "雲");
}

TEST(Utf8, EmptyInput) { EXPECT_TRUE(utf8::decode("").empty()); }

TEST(Utf8, RejectsMalformedSequences) {
  EXPECT_THROW(utf8::decode("\xff"), Utf8Error);
  EXPECT_THROW(utf8::decode("\xc0\x80"), Utf8Error);          // overlong NUL
  EXPECT_THROW(utf8::decode("\xe4\xb8"), Utf8Error);          // truncated
  EXPECT_THROW(utf8::decode("\xed\xa0\x80"), Utf8Error);      // surrogate
  EXPECT_THROW(utf8::decode("\xf4\x90\x80\x80"), Utf8Error);  // > U+10FFFF
  EXPECT_THROW(utf8::decode("a\x80"), Utf8Error);
}

TEST(Utf8, ErrorNamesByteOffset) {
  try {
    utf8::decode("ab\xff");
    FAIL();
  } catch (const Utf8Error& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos) << e.what();
  }
}
