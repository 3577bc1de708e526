/*
 * Copyright 2026 The InCTRL-cpp Authors.
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

#ifndef INCTRL_CLI_HPP_
#define INCTRL_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace inctrl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // module error
inline constexpr int kExitUsage = 2;

// Subcommands: train, eval, score, visualize. `args` excludes the program
// name. Never throws; errors become one categorized line on `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace inctrl

#endif  // INCTRL_CLI_HPP_
