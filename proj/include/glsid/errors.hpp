#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace glsid {

enum class ErrorCode {
  NonFinite,
  NonSymmetric,
  IndefiniteInput,
  DimensionMismatch,
  InvalidArgument,
  InvalidConfig,
  TLeqK,
  DispersionNotNND,
  DispersionNotPD,
  DispersionSingular,
  ResponseOutsideRange,
  DesignRankDeficient,
  InconsistentRestrictions,
  IdentificationFailure,
  TheilConditionViolated,
  NullVectorMismatch,
  UnsupportedNullity,
  ShiftInsufficient,
  RestrictionGramSingular,
  SMatrixSingular,
  InfeasibleParticular,
  Io,
  Parse,
};

// Rank and consistency conditions that gate the estimators. The string ids
// are stable and appear verbatim in CLI reports.
enum class Condition {
  RestrictionConsistency,  // rk(R) = rk(R, r)
  JointIdentification,     // (R; X) has full column rank
  DesignFullRank,          // rk(X) = K
  DispersionRegular,       // rk(Omega) = T
  MlsInvertibility,        // F'X has full column rank
  CombinedConsistency,     // rk(H) = rk(H, h)
  TheilRank,               // Theil's first rank condition on SUR blocks
  SMatrixInvertible,       // S = N'C+N invertible
  RestrictionGram,         // R C+^-1 R' invertible
  ResponseInRange,         // y in M(X : Omega)
};

std::string_view to_string(ErrorCode code);
std::string_view condition_id(Condition c);
std::string_view condition_formula(Condition c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<Condition> condition = std::nullopt)
      : std::runtime_error(what), code_(code), condition_(condition) {}

  ErrorCode code() const noexcept { return code_; }
  const std::optional<Condition>& condition() const noexcept { return condition_; }

 private:
  ErrorCode code_;
  std::optional<Condition> condition_;
};

}  // namespace glsid
