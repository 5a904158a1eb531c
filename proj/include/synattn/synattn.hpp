// Copyright 2026 The synattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "synattn/error.hpp"
#include "synattn/numerics/tensor.hpp"
#include "synattn/numerics/autodiff.hpp"
#include "synattn/numerics/parameter.hpp"
#include "synattn/numerics/checkpoint.hpp"
#include "synattn/model/config.hpp"
#include "synattn/model/transformer.hpp"
#include "synattn/syntax/tree.hpp"
#include "synattn/syntax/adjacency.hpp"
#include "synattn/syntax/losses.hpp"
#include "synattn/treedec/decode.hpp"
#include "synattn/data/vocab.hpp"
#include "synattn/data/conllu.hpp"
#include "synattn/data/corpus.hpp"
#include "synattn/data/batch.hpp"
#include "synattn/cli/run_config.hpp"
#include "synattn/cli/optimizer.hpp"
#include "synattn/cli/trainer.hpp"
#include "synattn/cli/bleu.hpp"
#include "synattn/cli/commands.hpp"
