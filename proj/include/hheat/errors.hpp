#pragma once

#include <stdexcept>
#include <string>

namespace hheat {

/// Coarse failure category; the CLI maps it onto its exit codes.
enum class ErrorCategory {
  Validation,  // characteristic points, failed checks
  Numerical,   // root finders, conditioning, reach
  Config,      // bad input files, schemas, expressions
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define HHEAT_DEFINE_ERROR(Name, Category)                     \
  class Name : public Error {                                  \
   public:                                                     \
    explicit Name(const std::string& what)                     \
        : Error(ErrorCategory::Category, #Name ": " + what) {} \
  };

HHEAT_DEFINE_ERROR(ParameterOutOfRange, Numerical)
HHEAT_DEFINE_ERROR(ConvergenceFailure, Numerical)
HHEAT_DEFINE_ERROR(DegenerateGradient, Numerical)
HHEAT_DEFINE_ERROR(CharacteristicPoint, Validation)
HHEAT_DEFINE_ERROR(CharacteristicDomain, Validation)
HHEAT_DEFINE_ERROR(StepTooLarge, Numerical)
HHEAT_DEFINE_ERROR(OutOfChart, Numerical)
HHEAT_DEFINE_ERROR(NoRoot, Numerical)
HHEAT_DEFINE_ERROR(MultipleRoots, Numerical)
HHEAT_DEFINE_ERROR(ReachExceeded, Numerical)
HHEAT_DEFINE_ERROR(IllConditioned, Numerical)
HHEAT_DEFINE_ERROR(ConfigError, Config)
HHEAT_DEFINE_ERROR(SchemaError, Config)
HHEAT_DEFINE_ERROR(ValidationError, Validation)

#undef HHEAT_DEFINE_ERROR

}  // namespace hheat
