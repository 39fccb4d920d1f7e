// Copyright 2026 The Granite Authors
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

#include "granite/compressor.hpp"
#include "granite/datagen.hpp"
#include "granite/gnn.hpp"
#include "granite/io.hpp"
#include "granite/ising.hpp"
#include "granite/oracle.hpp"
#include "granite/parallel.hpp"
#include "granite/random.hpp"
#include "granite/satgen.hpp"
#include "granite/solvers.hpp"
#include "granite/train.hpp"
