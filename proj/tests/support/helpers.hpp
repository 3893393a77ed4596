#pragma once

#include <doctest.h>

#include <functional>

#include "circphase/error.hpp"

namespace testing_support {

/// Error code thrown by fn; fails the test when nothing is thrown.
inline circphase::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const circphase::Error& e) {
    return e.code();
  }
  FAIL("expected a circphase::Error");
  return circphase::ErrorCode::Io;
}

}  // namespace testing_support
