/*
 * Copyright 2026 The ExpNet Kit Authors.
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

#ifndef EXPNET_CLI_H_
#define EXPNET_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace expnet {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitRuntime = 2;

// Runs the expnet-kit command line. `args` excludes the program name.
// Returns 0 on success, 1 when input fails validation, 2 on runtime errors
// and usage errors.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace expnet

#endif  // EXPNET_CLI_H_
