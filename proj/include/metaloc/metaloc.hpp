// SPDX-License-Identifier: Apache-2.0
//
// metaloc: NLOS localization through frequency-selective metasurfaces
// Copyright (C) 2026 The metaloc authors
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
// ------------------------------------------------------------------------

#ifndef metaloc_metaloc_H
#define metaloc_metaloc_H

#include "geometry.hpp"
#include "metaprism.hpp"
#include "array_factor.hpp"
#include "channel.hpp"
#include "estimator.hpp"
#include "fingerprint_cache.hpp"
#include "experiments.hpp"
#include "config.hpp"
#include "campaign.hpp"

#endif
