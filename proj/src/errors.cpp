#include "glsid/errors.hpp"

namespace glsid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::IndefiniteInput: return "IndefiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TLeqK: return "TLeqK";
    case ErrorCode::DispersionNotNND: return "DispersionNotNND";
    case ErrorCode::DispersionNotPD: return "DispersionNotPD";
    case ErrorCode::DispersionSingular: return "DispersionSingular";
    case ErrorCode::ResponseOutsideRange: return "ResponseOutsideRange";
    case ErrorCode::DesignRankDeficient: return "DesignRankDeficient";
    case ErrorCode::InconsistentRestrictions: return "InconsistentRestrictions";
    case ErrorCode::IdentificationFailure: return "IdentificationFailure";
    case ErrorCode::TheilConditionViolated: return "TheilConditionViolated";
    case ErrorCode::NullVectorMismatch: return "NullVectorMismatch";
    case ErrorCode::UnsupportedNullity: return "UnsupportedNullity";
    case ErrorCode::ShiftInsufficient: return "ShiftInsufficient";
    case ErrorCode::RestrictionGramSingular: return "RestrictionGramSingular";
    case ErrorCode::SMatrixSingular: return "SMatrixSingular";
    case ErrorCode::InfeasibleParticular: return "InfeasibleParticular";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

std::string_view condition_id(Condition c) {
  switch (c) {
    case Condition::RestrictionConsistency: return "restriction-consistency";
    case Condition::JointIdentification: return "joint-identification";
    case Condition::DesignFullRank: return "design-full-rank";
    case Condition::DispersionRegular: return "dispersion-regular";
    case Condition::MlsInvertibility: return "mls-invertibility";
    case Condition::CombinedConsistency: return "combined-consistency";
    case Condition::TheilRank: return "theil-rank";
    case Condition::SMatrixInvertible: return "s-matrix-invertible";
    case Condition::RestrictionGram: return "restriction-gram";
    case Condition::ResponseInRange: return "response-in-range";
  }
  return "unknown";
}

std::string_view condition_formula(Condition c) {
  switch (c) {
    case Condition::RestrictionConsistency: return "rk(R) = rk(R, r)";
    case Condition::JointIdentification: return "(R; X) has full column rank";
    case Condition::DesignFullRank: return "rk(X) = K";
    case Condition::DispersionRegular: return "rk(Omega) = T";
    case Condition::MlsInvertibility: return "F'X has full column rank";
    case Condition::CombinedConsistency: return "rk(H) = rk(H, h)";
    case Condition::TheilRank: return "no nonzero d with F_t' X_t d = 0 for all t";
    case Condition::SMatrixInvertible: return "S = N' C+ N invertible";
    case Condition::RestrictionGram: return "R C+^-1 R' invertible";
    case Condition::ResponseInRange: return "y in M(X : Omega)";
  }
  return "";
}

}  // namespace glsid
