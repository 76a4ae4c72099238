/*
 * Copyright 2026 the uptake authors.
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

// Umbrella header for the uptake measurement library.

#include "uptake/corpus.hpp"       // IWYU pragma: export
#include "uptake/csv.hpp"          // IWYU pragma: export
#include "uptake/embeddings.hpp"   // IWYU pragma: export
#include "uptake/error.hpp"        // IWYU pragma: export
#include "uptake/format.hpp"       // IWYU pragma: export
#include "uptake/io.hpp"           // IWYU pragma: export
#include "uptake/nuc.hpp"          // IWYU pragma: export
#include "uptake/parallel.hpp"     // IWYU pragma: export
#include "uptake/prng.hpp"         // IWYU pragma: export
#include "uptake/similarity.hpp"   // IWYU pragma: export
#include "uptake/snowball.hpp"     // IWYU pragma: export
#include "uptake/stats.hpp"        // IWYU pragma: export
#include "uptake/textprep.hpp"     // IWYU pragma: export
#include "uptake/version.hpp"      // IWYU pragma: export
