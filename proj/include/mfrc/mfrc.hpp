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

#include "mfrc/centrality.hpp"
#include "mfrc/dataset.hpp"
#include "mfrc/error.hpp"
#include "mfrc/evaluation.hpp"
#include "mfrc/factorization.hpp"
#include "mfrc/harness.hpp"
#include "mfrc/model.hpp"
#include "mfrc/serialization.hpp"
