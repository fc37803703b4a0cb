#pragma once

#include <stdexcept>
#include <string>

namespace seesaw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SEESAW_DEFINE_ERROR(Name)            \
  class Name : public Error {                \
   public:                                   \
    explicit Name(const std::string& what)   \
        : Error(#Name ": " + what) {}        \
  }

SEESAW_DEFINE_ERROR(ShapeMismatch);
SEESAW_DEFINE_ERROR(LengthMismatch);
SEESAW_DEFINE_ERROR(IncompatibleIO);
SEESAW_DEFINE_ERROR(EmptyPopulation);
SEESAW_DEFINE_ERROR(FrameTooSmall);
SEESAW_DEFINE_ERROR(BadConfig);
SEESAW_DEFINE_ERROR(NonFiniteFitness);
SEESAW_DEFINE_ERROR(EpisodeOver);
SEESAW_DEFINE_ERROR(BadAction);
SEESAW_DEFINE_ERROR(IoMismatch);
SEESAW_DEFINE_ERROR(ConfigError);
SEESAW_DEFINE_ERROR(LedgerParseError);
SEESAW_DEFINE_ERROR(ModelParseError);
SEESAW_DEFINE_ERROR(ModelEnvMismatch);
SEESAW_DEFINE_ERROR(CheckpointError);

/// Wire-level failure talking to an external environment process.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error("ProtocolError: " + what) {}

 protected:
  ProtocolError(const std::string& prefix, const std::string& what) : Error(prefix + what) {}
};

class Timeout : public ProtocolError {
 public:
  explicit Timeout(const std::string& what) : ProtocolError("Timeout: ", what) {}
};

/// The environment died mid-episode; the episode is scored at the env floor.
class EnvFailure : public Error {
 public:
  explicit EnvFailure(const std::string& what) : Error("EnvFailure: " + what) {}
};

#undef SEESAW_DEFINE_ERROR

}  // namespace seesaw
