/* Copyright 2026 The Mechagency Authors. All Rights Reserved.

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

#include <string>

#include <nlohmann/json.hpp>

#include "mechagency/scm.hpp"

namespace mechagency {

nlohmann::json domain_to_json(const Domain& d);
Domain domain_from_json(const nlohmann::json& j);

/// Tabulates every mechanism assignment over its dependencies and every
/// object kernel over (parameter, parents). All domains must be enumerable
/// and noise must have finite support or a kernel.
nlohmann::json model_to_json(const MechanizedSCM& m,
                             std::size_t max_entries = 1'000'000);

/// Rebuilds a table-backed model from `model_to_json` output.
MechanizedSCM model_from_json(const nlohmann::json& j);

/// Equal signatures, mechanism tables and kernel tables.
bool models_equal(const MechanizedSCM& a, const MechanizedSCM& b);

}  // namespace mechagency
