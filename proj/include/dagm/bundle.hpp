// Copyright 2026 The dagm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dagm/classifier.hpp"
#include "dagm/generator.hpp"
#include "dagm/matcher.hpp"
#include "dagm/policy.hpp"
#include "dagm/vocab.hpp"

namespace dagm {

inline constexpr std::uint8_t kBundleVersion = 1;

// Layout: "DAGM", version byte, u32 metadata length, metadata JSON, one
// little-endian float32 per scalar of every tensor in metadata order, then a
// CRC-32 of everything after the magic. Integers are little-endian.
struct ModelBundle {
  Vocabulary vocab;
  std::optional<ActClassifier> classifier;
  std::optional<PolicyNet> policy;
  std::optional<Generator> generator;
  std::optional<Matcher> matcher;
  std::string config_echo;

  // Rounds every parameter to float32 so in-memory inference matches what a
  // saved and reloaded bundle computes.
  void round_to_float();
};

void round_to_float(ParameterStore& store);

std::string serialize_bundle(const ModelBundle& bundle);
// Throws LoadError on bad magic, version, checksum or metadata.
ModelBundle parse_bundle(std::string_view bytes);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace dagm
