// Copyright 2026 The Pilotlet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pilotlet {

inline constexpr size_t kTailBytes = 64 * 1024;

/// Throws Error(kIoFailed).
std::string ReadFile(const std::filesystem::path &path);
/// Write to a temp file in the same directory, then rename.
void WriteFileAtomic(const std::filesystem::path &path, std::string_view contents);
void WriteFile(const std::filesystem::path &path, std::string_view contents);

/// Last `max_bytes` of a file; empty if it does not exist.
std::string TailOfFile(const std::filesystem::path &path, size_t max_bytes = kTailBytes);
/// Last `max_bytes` of a string.
std::string TailOf(std::string_view text, size_t max_bytes = kTailBytes);

std::vector<std::string> SplitLines(std::string_view text);
std::string_view Trim(std::string_view s);

/// POSIX shell single-quoting.
std::string ShellQuote(std::string_view s);

std::string Hostname();

}  // namespace pilotlet
