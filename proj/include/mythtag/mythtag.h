// Copyright 2026 The mythtag Authors.
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

#ifndef MYTHTAG_MYTHTAG_H_
#define MYTHTAG_MYTHTAG_H_

// Everything at once. Pull individual headers to keep builds lean.

#include "mythtag/cli.h"
#include "mythtag/evaluator.h"
#include "mythtag/io.h"
#include "mythtag/llm_gateway.h"
#include "mythtag/normalize.h"
#include "mythtag/pipeline.h"
#include "mythtag/preservation.h"
#include "mythtag/quote_verifier.h"
#include "mythtag/schema.h"
#include "mythtag/service.h"
#include "mythtag/sha256.h"
#include "mythtag/standoff.h"
#include "mythtag/store.h"
#include "mythtag/tag_parser.h"
#include "mythtag/utf8.h"

#endif  // MYTHTAG_MYTHTAG_H_
