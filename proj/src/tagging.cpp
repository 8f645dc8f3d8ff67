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

#include "dagm/classifier.hpp"

namespace dagm {

void tag_corpus(Corpus& corpus, const ActClassifier& model) {
  for (auto& d : corpus) {
    const auto acts = model.predict_dialogue(d);
    for (std::size_t k = 0; k < acts.size(); ++k) {
      d.turns[k].act = acts[k];
      d.turns[k].act_source = "tagged";
    }
  }
}

}  // namespace dagm
