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

#ifndef PFT_CLI_H_
#define PFT_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace pft {

// Entry point of the `pft` tool. `args` excludes the program name. Returns
// the process exit code.
//
//   pft gen-synth --config synth.ini --out DIR [--seed S]
//   pft run       --config run.ini   --out DIR [--seed S] [--threads N]
//   pft bound     --config run.ini   --out DIR [--seed S] [--threads N]
//   pft report    [--out summary.csv] REPORT.json...
//
// PFT_THREADS is read when --threads is absent.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace pft

#endif  // PFT_CLI_H_
