// Copyright 2026 The Saute Decoding Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SAUTE_PROMPTS_H_
#define SAUTE_PROMPTS_H_

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "saute/mdp.h"

namespace saute {

struct Prompt {
  std::string id;
  std::vector<TokenId> tokens;

  bool operator==(const Prompt&) const = default;
};

/// One JSON object per line: {"id": "...", "prompt": [ids] | "text"}.
/// Text prompts go through WhitespaceTokenizer. Blank lines are skipped.
std::vector<Prompt> ParsePromptsJsonl(std::istream& in, const Vocabulary& vocab);
std::vector<Prompt> ReadPromptsJsonl(const std::filesystem::path& path,
                                     const Vocabulary& vocab);
void WritePromptsJsonl(const std::filesystem::path& path,
                       const std::vector<Prompt>& prompts);

}  // namespace saute

#endif  // SAUTE_PROMPTS_H_
