#pragma once

#include <stdexcept>
#include <string>

namespace ueeg {

enum class ErrorCode {
    ShapeMismatch,
    DomainError,
    AxisOutOfRange,
    BoundsError,
    NonFiniteInput,
    NotScalarLoss,
    DetachedLoss,
    NonScalarOutput,
    KernelLargerThanInput,
    BatchTooSmall,
    WindowLargerThanInput,
    InvalidProbability,
    EmptySequence,
    LabelOutOfRange,
    DimensionMismatch,
    KExceedsTrainingSize,
    DegenerateData,
    BadMagic,
    VersionUnsupported,
    NonFiniteData,
    SignalTooShort,
    TooFewSamples,
    InvalidSpec,
    InputTooSmall,
    GeometryMismatch,
    DatasetError,
    NonFiniteLoss,
    IoError,
    LengthMismatch,
    SingleClassInput,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::AxisOutOfRange: return "AxisOutOfRange";
        case ErrorCode::BoundsError: return "BoundsError";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::NotScalarLoss: return "NotScalarLoss";
        case ErrorCode::DetachedLoss: return "DetachedLoss";
        case ErrorCode::NonScalarOutput: return "NonScalarOutput";
        case ErrorCode::KernelLargerThanInput: return "KernelLargerThanInput";
        case ErrorCode::BatchTooSmall: return "BatchTooSmall";
        case ErrorCode::WindowLargerThanInput: return "WindowLargerThanInput";
        case ErrorCode::InvalidProbability: return "InvalidProbability";
        case ErrorCode::EmptySequence: return "EmptySequence";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::KExceedsTrainingSize: return "KExceedsTrainingSize";
        case ErrorCode::DegenerateData: return "DegenerateData";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::VersionUnsupported: return "VersionUnsupported";
        case ErrorCode::NonFiniteData: return "NonFiniteData";
        case ErrorCode::SignalTooShort: return "SignalTooShort";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::InputTooSmall: return "InputTooSmall";
        case ErrorCode::GeometryMismatch: return "GeometryMismatch";
        case ErrorCode::DatasetError: return "DatasetError";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::SingleClassInput: return "SingleClassInput";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ueeg
