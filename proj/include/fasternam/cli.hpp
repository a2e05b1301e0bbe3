// Copyright 2026 The FasterNAM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FASTERNAM_CLI_HPP_
#define FASTERNAM_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace fasternam {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,  // validation, degenerate input, failed check
  kExitIoOrParse = 2,   // unreadable file, malformed text, bad usage
};

// Runs one CLI invocation. args[0] is the program name. Reports go to
// `out`, diagnostics to `err`.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err);

}  // namespace fasternam

#endif  // FASTERNAM_CLI_HPP_
