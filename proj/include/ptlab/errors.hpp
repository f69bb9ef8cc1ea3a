#pragma once

#include <stdexcept>
#include <string>

namespace ptlab {

struct PtlabError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// configuration / input problems (CLI exit code 1)
struct ConfigError : PtlabError { using PtlabError::PtlabError; };
struct IoError : PtlabError { using PtlabError::PtlabError; };
struct WeightSumViolation : ConfigError { using ConfigError::ConfigError; };

// numerical failures (CLI exit code 2)
struct NumericalError : PtlabError { using PtlabError::PtlabError; };
struct DegenerateSpectrum : NumericalError { using NumericalError::NumericalError; };
struct DegenerateQuadratic : NumericalError { using NumericalError::NumericalError; };
struct MetricNotDiagonalizable : NumericalError { using NumericalError::NumericalError; };
struct NegativeRealAxisEigenvalue : NumericalError { using NumericalError::NumericalError; };
struct VanishingTrace : NumericalError { using NumericalError::NumericalError; };
struct NonRealSpectrum : NumericalError { using NumericalError::NumericalError; };
struct IntegrationFailure : NumericalError { using NumericalError::NumericalError; };
struct StepSizeUnderflow : IntegrationFailure { using IntegrationFailure::IntegrationFailure; };
struct RegimeMismatch : NumericalError { using NumericalError::NumericalError; };
struct FormalismMismatch : NumericalError { using NumericalError::NumericalError; };

} // namespace ptlab
