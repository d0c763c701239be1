/*
 * Copyright 2026 The MFRC Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <utility>

#include "mfrc/alswr.hpp"
#include "mfrc/model.hpp"
#include "mfrc/sgd.hpp"

namespace mfrc {

/// Dispatches on kind; mfrc builds its weights from `train` with cfg.norm.
inline std::pair<FactorModel, TrainTrace> train_model(ModelKind kind, const RatingDataset& train,
                                                      const TrainConfig& cfg) {
  switch (kind) {
    case ModelKind::mfrc: return train_mfrc(train, cfg);
    case ModelKind::biased_mf: return train_biased_mf(train, cfg);
    case ModelKind::plain_mf: return train_plain_mf(train, cfg);
    case ModelKind::alswr: return train_alswr(train, cfg);
  }
  throw ConfigError("unknown model kind");
}

}  // namespace mfrc
