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
#include "ragcg/prompts.hpp"

using namespace ragcg;
using prompts::PromptLibrary;

namespace {

PromptLibrary small_library() {
  PromptLibrary lib;
  lib.add_fragment({"ikec", "THINK FIRST."});
  lib.add_fragment({"key_sentence", "Focus"});
  lib.add_template(prompts::parse_template("t", "#! header line\n@@system\nsys {{> key_sentence}}.\n"
                                                "@@user\nTask.\n{{> ikec}}\nText: {{body}}\nEnd"));
  return lib;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::UsageError;
}

}  // namespace

TEST(Prompts, ParsesRolesPlaceholdersAndFragments) {
  const auto t = prompts::parse_template(
      "x", "#! dropped\n@@system\nS {{a}}\n@@user\nU {{b}} {{> f}}\n@@assistant\nA\n");
  ASSERT_EQ(t.messages.size(), 3u);
  EXPECT_EQ(t.messages[0].role, llm::Role::System);
  EXPECT_EQ(t.messages[2].role, llm::Role::Assistant);
  EXPECT_EQ(t.required_placeholders, (std::set<std::string>{"a", "b"}));
  EXPECT_EQ(t.fragments, (std::vector<std::string>{"f"}));
  EXPECT_EQ(t.body.find("dropped"), std::string::npos);
}

TEST(Prompts, SyntaxErrors) {
  EXPECT_EQ(code_of([] { prompts::parse_template("x", "@@user\nhello {{name"); }), Errc::TemplateSyntax);
  EXPECT_EQ(code_of([] { prompts::parse_template("x", "no sections"); }), Errc::TemplateSyntax);
  EXPECT_EQ(code_of([] { prompts::parse_template("x", "@@user\n{{bad name!}}"); }), Errc::TemplateSyntax);
}

TEST(Prompts, RenderSubstitutesVerbatim) {
  const auto lib = small_library();
  const auto msgs = lib.render("t", {{"body", "{{body}} and {{> ikec}}"}}, false);
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(msgs[0].content, "sys Focus.");
  EXPECT_EQ(msgs[1].content, "Task.\nText: {{body}} and {{> ikec}}\nEnd");
}

TEST(Prompts, IkecFlagInsertsExactlyTheBlock) {
  const auto lib = small_library();
  const auto off = lib.render("t", {{"body", "B"}}, false);
  const auto on = lib.render("t", {{"body", "B"}}, true);
  EXPECT_EQ(off[0], on[0]);
  EXPECT_EQ(lib.ikec_block(), "THINK FIRST.\n");
  EXPECT_EQ(on[1].content, "Task.\nTHINK FIRST.\nText: B\nEnd");
  std::string rebuilt = off[1].content;
  rebuilt.insert(std::string("Task.\n").size(), lib.ikec_block());
  EXPECT_EQ(rebuilt, on[1].content);
}

TEST(Prompts, PlaceholderMismatch) {
  const auto lib = small_library();
  EXPECT_EQ(code_of([&] { lib.render("t", {}, false); }), Errc::MissingPlaceholder);
  EXPECT_EQ(code_of([&] { lib.render("t", {{"body", "x"}, {"extra", "y"}}, false); }),
            Errc::UnexpectedPlaceholder);
  EXPECT_EQ(code_of([&] { lib.render("nope", {}, false); }), Errc::UnknownTemplate);
}

TEST(Prompts, BundledLibraryLoads) {
  const auto lib = PromptLibrary::load(PromptLibrary::default_dir());
  for (const char* id : {"splitter", "renovation", "codrc", "augmentation", "task_planner",
                         "script_generator", "direct_codegen", "react"}) {
    EXPECT_TRUE(lib.has_template(id)) << id;
  }
  EXPECT_FALSE(lib.ikec_block().empty());
  // the gated stages carry the IKEC fragment, the structural ones do not
  for (const char* id : {"renovation", "augmentation", "task_planner", "script_generator"}) {
    const auto& f = lib.get(id).fragments;
    EXPECT_NE(std::find(f.begin(), f.end(), "ikec"), f.end()) << id;
  }
  for (const char* id : {"splitter", "codrc"}) {
    const auto& f = lib.get(id).fragments;
    EXPECT_EQ(std::find(f.begin(), f.end(), "ikec"), f.end()) << id;
  }
  // no template leaks its header comment
  for (const auto& id : lib.template_ids()) {
    EXPECT_EQ(lib.get(id).body.find("#!"), std::string::npos) << id;
  }
}

TEST(Prompts, MissingDirectory) {
  EXPECT_EQ(code_of([] { PromptLibrary::load("/nonexistent/prompt/dir"); }), Errc::UnreadableInput);
}
