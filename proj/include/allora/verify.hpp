/* Copyright 2026 The ALLoRA Lab Authors. All Rights Reserved.

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

#ifndef ALLORA_VERIFY_HPP_
#define ALLORA_VERIFY_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace allora {

/// One self-check: `observed` is the worst error found, `tolerance` the
/// largest error accepted (for bound checks, the allowed ratio).
struct CheckResult {
  std::string module;
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::string module = "all";  // all | dropout | gradients | ripple
  std::uint64_t seed = 0;
  /// Name of a check whose library result is perturbed before comparison;
  /// used to prove the harness catches a broken implementation.
  std::string fault;
};

const std::vector<std::string>& verify_modules();
bool is_verify_module(std::string_view name);

/// Enumeration, finite-difference and bound checks for the chosen module.
std::vector<CheckResult> run_checks(const VerifyOptions& options);

}  // namespace allora

#endif  // ALLORA_VERIFY_HPP_
