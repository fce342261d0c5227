//
// Copyright 2026 The PFT Authors
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
//

#ifndef PFT_REPORT_H_
#define PFT_REPORT_H_

#include <string>

#include "json.hpp"
#include "pft/bounds.h"
#include "pft/orchestrator.h"

namespace pft {

// Reports serialize with a fixed key order so that identical runs produce
// byte-identical files.
nlohmann::ordered_json RunConfigToJson(const RunConfig& cfg);
nlohmann::ordered_json BoundReportToJson(const BoundReport& b);
nlohmann::ordered_json ReportToJson(const ExperimentReport& report);

// Pretty-printed JSON with a trailing newline.
std::string DumpJson(const nlohmann::ordered_json& j);

}  // namespace pft

#endif  // PFT_REPORT_H_
