// Copyright 2026 InertiaKit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace inertia::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Verbosity comes from the INERTIA_KIT_LOG environment variable
// (error|warn|info|debug); default is warn. Diagnostics go to stderr so they
// never mix with machine-readable stdout.
inline Level level() {
  static Level lv = [] {
    const char* env = std::getenv("INERTIA_KIT_LOG");
    if (env == nullptr) return Level::Warn;
    std::string s(env);
    if (s == "error") return Level::Error;
    if (s == "warn") return Level::Warn;
    if (s == "info") return Level::Info;
    if (s == "debug") return Level::Debug;
    return Level::Warn;
  }();
  return lv;
}

inline void emit(Level lv, const char* tag, const std::string& msg) {
  if (static_cast<int>(lv) <= static_cast<int>(level())) {
    std::cerr << "[" << tag << "] " << msg << "\n";
  }
}

inline void error(const std::string& msg) { emit(Level::Error, "error", msg); }
inline void warn(const std::string& msg) { emit(Level::Warn, "warn", msg); }
inline void info(const std::string& msg) { emit(Level::Info, "info", msg); }
inline void debug(const std::string& msg) { emit(Level::Debug, "debug", msg); }

}  // namespace inertia::log
