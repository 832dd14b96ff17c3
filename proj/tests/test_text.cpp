/*
 * Copyright 2026 The ragcodegen Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include "ragcg/error.hpp"
#include "ragcg/text.hpp"

using namespace ragcg;

TEST(Text, CountsScalarsNotBytes) {
  EXPECT_EQ(text::count_chars(""), 0u);
  EXPECT_EQ(text::count_chars("abc"), 3u);
  EXPECT_EQ(text::count_chars("é中🙂"), 3u);
  EXPECT_EQ(std::string("é中🙂").size(), 9u);
}

TEST(Text, BoundariesIncludeEnd) {
  const auto b = text::char_boundaries("aé中");
  ASSERT_EQ(b.size(), 4u);
  EXPECT_EQ(b[0], 0u);
  EXPECT_EQ(b[1], 1u);
  EXPECT_EQ(b[2], 3u);
  EXPECT_EQ(b[3], 6u);
}

TEST(Text, SliceAndTake) {
  EXPECT_EQ(text::slice_chars("aé中🙂b", 1, 4), "é中🙂");
  EXPECT_EQ(text::slice_chars("abc", 2, 2), "");
  EXPECT_EQ(text::take_chars("中中中", 2), "中中");
  EXPECT_EQ(text::take_chars("ab", 10), "ab");
}

TEST(Text, NormalizeCollapsesAllWhitespace) {
  EXPECT_EQ(text::normalize_ws("  a \t\n b\f\fc  "), "a b c");
  EXPECT_EQ(text::normalize_ws(" \n "), "");
  EXPECT_EQ(text::trim("\n x y \t"), "x y");
}

TEST(Text, LinesDropCarriageReturns) {
  const auto ls = text::lines("a\r\nb\n\nc");
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[0], "a");
  EXPECT_EQ(ls[2], "");
  EXPECT_EQ(ls[3], "c");
}

TEST(Text, WordsSplitJoin) {
  const auto w = text::words("  one two\nthree ");
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(text::join(w, "-"), "one-two-three");
  EXPECT_TRUE(text::starts_with("prefix-rest", "prefix"));
  EXPECT_FALSE(text::starts_with("pre", "prefix"));
}

TEST(Text, SplitKeepsEmptyFields) {
  const auto f = text::split("a,,b,", ',');
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[1], "");
  EXPECT_EQ(f[3], "");
}

TEST(Errors, FamiliesDriveExitCodes) {
  EXPECT_EQ(family_of(Errc::UsageError), ErrorFamily::Usage);
  EXPECT_EQ(family_of(Errc::ConfigError), ErrorFamily::Usage);
  EXPECT_EQ(family_of(Errc::UnknownGroup), ErrorFamily::Usage);
  EXPECT_EQ(family_of(Errc::NoRecordedResponse), ErrorFamily::Stage);
  EXPECT_EQ(family_of(Errc::ContentLossDetected), ErrorFamily::Stage);
  const Error e(Errc::EmptySet, "nothing");
  EXPECT_EQ(e.code(), Errc::EmptySet);
  EXPECT_NE(std::string(e.what()).find("nothing"), std::string::npos);
  EXPECT_EQ(errc_name(Errc::ZeroTotal), "ZeroTotal");
}
