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

#include "saute/prompts.h"

#include <fstream>

#include <nlohmann/json.hpp>

#include "saute/errors.h"
#include "saute/toy_models.h"

namespace saute {

std::vector<Prompt> ParsePromptsJsonl(std::istream& in,
                                      const Vocabulary& vocab) {
  const WhitespaceTokenizer tokenizer(vocab);
  std::vector<Prompt> prompts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("prompt line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("id") || !j.contains("prompt")) {
      throw IoError("prompt line " + std::to_string(line_no) +
                    " needs 'id' and 'prompt' fields");
    }
    Prompt p;
    p.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    const auto& body = j["prompt"];
    if (body.is_string()) {
      p.tokens = tokenizer.Encode(body.get<std::string>());
    } else {
      p.tokens = body.get<std::vector<TokenId>>();
      for (TokenId t : p.tokens) {
        if (!vocab.Contains(t)) {
          throw ConfigError("prompt '" + p.id + "' has out-of-vocabulary token " +
                            std::to_string(t));
        }
      }
    }
    prompts.push_back(std::move(p));
  }
  return prompts;
}

std::vector<Prompt> ReadPromptsJsonl(const std::filesystem::path& path,
                                     const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prompt file " + path.string());
  return ParsePromptsJsonl(in, vocab);
}

void WritePromptsJsonl(const std::filesystem::path& path,
                       const std::vector<Prompt>& prompts) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write prompt file " + path.string());
  for (const Prompt& p : prompts) {
    out << nlohmann::json{{"id", p.id}, {"prompt", p.tokens}}.dump() << "\n";
  }
}

}  // namespace saute
