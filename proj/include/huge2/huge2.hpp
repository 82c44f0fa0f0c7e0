/* Copyright 2026 The HUGE2 Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include "huge2/bench.hpp"
#include "huge2/decomposition.hpp"
#include "huge2/instrumentation.hpp"
#include "huge2/probe.hpp"
#include "huge2/reference.hpp"
#include "huge2/tensor.hpp"
#include "huge2/tensor_io.hpp"
#include "huge2/training_grad.hpp"
#include "huge2/untangling.hpp"
#include "huge2/verify.hpp"
