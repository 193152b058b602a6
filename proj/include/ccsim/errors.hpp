/*
 * Copyright 2026 the ccsim authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace ccsim {

// Bad configuration or bad usage of an API. Maps to CLI exit code 1.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string &what) : std::runtime_error(what) {}
};

// A simulation failed at runtime (watchdog, protocol violation). Exit code 2.
class sim_error : public std::runtime_error {
public:
  explicit sim_error(const std::string &what) : std::runtime_error(what) {}
};

} // namespace ccsim
