#pragma once

#include <stdexcept>
#include <string>

namespace slim {

enum class ErrorCode {
  DegenerateDirection,
  DegenerateCluster,
  DegenerateFit,
  EmptyMap,
  DimensionMismatch,
  RankDeficient,
  NoPairs,
  MissingOdometry,
  DisconnectedGraph,
  IllConditioned,
  SingularBlock,
  NonPSD,
  IoFailure,
  IdCollision,
  TooFewPoses,
  TrackingLost,
  NoMatch,
  ConfigError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace slim
