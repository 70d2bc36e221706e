#pragma once

#include <stdexcept>
#include <string>

namespace designbench {

enum class Arm { kTreated, kControl };

inline const char* arm_name(Arm arm) {
  return arm == Arm::kTreated ? "treated" : "control";
}

// A realized sample contains no observations in one assignment arm, so an
// estimator that needs both arms cannot be evaluated.
class EmptyArmError : public std::runtime_error {
 public:
  explicit EmptyArmError(Arm arm)
      : std::runtime_error(std::string("sample has an empty ") + arm_name(arm) + " arm"),
        arm_(arm) {}

  Arm arm() const { return arm_; }

 private:
  Arm arm_;
};

// A treatment probability of exactly 0 or 1 where strictly interior
// probabilities are required.
class PositivityError : public std::runtime_error {
 public:
  explicit PositivityError(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace designbench
