/*
 * Copyright 2026 The sparse-hjb Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "sparse_hjb/eikonal_oracle.hpp"
#include "sparse_hjb/errors.hpp"
#include "sparse_hjb/experiments.hpp"
#include "sparse_hjb/feedback.hpp"
#include "sparse_hjb/grid.hpp"
#include "sparse_hjb/hjb_solver.hpp"
#include "sparse_hjb/maximizer.hpp"
#include "sparse_hjb/optimality_check.hpp"
#include "sparse_hjb/problem.hpp"
