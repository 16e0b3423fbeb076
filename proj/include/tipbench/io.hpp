/*
 * Copyright 2026 The tipbench Authors.
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

#ifndef TIPBENCH_IO_HPP_
#define TIPBENCH_IO_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace tipbench {

// All failures throw Error(kIo) naming the path.
std::string ReadFile(const std::string& path);
// Writes to a sibling temporary and renames, so readers never see a partial
// file. Parent directories are created.
void WriteFile(const std::string& path, std::string_view content);
void MakeDirs(const std::string& path);
bool PathExists(const std::string& path);
// Regular files in `dir` whose names end with `suffix`, sorted by name.
std::vector<std::string> ListFiles(const std::string& dir, std::string_view suffix);

// Non-empty lines; a trailing '\r' is stripped.
std::vector<std::string> SplitLines(std::string_view text);

// "fnv1a64:" + 16 hex digits.
std::string ContentHash(std::string_view bytes);

}  // namespace tipbench

#endif  // TIPBENCH_IO_HPP_
