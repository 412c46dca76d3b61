// Two error classes, mirroring the process exit codes: UserError (bad input,
// bad flags, malformed files) exits 1; InternalError (broken invariant,
// corrupt state) exits 2.

#pragma once

#include <stdexcept>
#include <string>

namespace treecomment {

struct UserError : std::runtime_error {
  explicit UserError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InternalError : std::runtime_error {
  explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace treecomment
