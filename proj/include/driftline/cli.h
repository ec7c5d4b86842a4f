/* Copyright 2026 The Driftline Authors. All Rights Reserved.

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

#ifndef DRIFTLINE_CLI_H_
#define DRIFTLINE_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace driftline {

// Exit codes of the driftline tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // failed chain or metric error
inline constexpr int kExitConfig = 2;   // config error or bad usage

// Entry point of the command-line tool; `args` excludes the program name.
// Subcommands: ingest, run, resume, series, fit, mgg, report.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace driftline

#endif  // DRIFTLINE_CLI_H_
