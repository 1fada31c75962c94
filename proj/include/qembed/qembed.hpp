// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The qembed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "qembed/acceptance.hpp"
#include "qembed/distances.hpp"
#include "qembed/ensembles.hpp"
#include "qembed/errors.hpp"
#include "qembed/experiments.hpp"
#include "qembed/geometry.hpp"
#include "qembed/parallel.hpp"
#include "qembed/quantizer.hpp"
#include "qembed/random.hpp"
#include "qembed/report.hpp"
#include "qembed/vector_ops.hpp"
