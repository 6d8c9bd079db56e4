#pragma once

#include <doctest.h>

#include <functional>

#include "dkg/error.hpp"
#include "gradcheck.hpp"

namespace dkg::test {

/// Runs `fn` and checks that it throws dkg::Error with `expected`.
inline void check_error(ErrorCode expected, const std::function<void()>& fn) {
  try {
    fn();
    FAIL("expected " << to_string(expected));
  } catch (const Error& e) {
    CHECK_MESSAGE(e.code() == expected, e.what());
  }
}

}  // namespace dkg::test
