#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kidvoice {

/// Machine-readable failure codes shared by every module. The names double
/// as the wire codes in HTTP error bodies.
enum class Errc {
    UnsupportedFormat,
    CorruptHeader,
    EmptySignal,
    TooFewFrames,
    BadConfig,
    ShapeMismatch,
    AgeOutOfRange,
    UnknownWord,
    UnknownSpeaker,
    DuplicateUtteranceId,
    TooFewRecordings,
    UnknownKeyword,
    EmptySequence,
    DimMismatch,
    EmptyTemplateStore,
    NotRejected,
    EmptyLexicon,
    EmptyAgenda,
    DuplicateHandlerName,
    SessionFinished,
    UnknownSession,
    UnknownIntent,
    MissingSlot,
    UnmappedGrapheme,
    NoTemplates,
    EmptySplit,
    IoError,
    ParseError,
};

constexpr std::string_view errc_name(Errc c) noexcept {
    switch (c) {
        case Errc::UnsupportedFormat: return "UnsupportedFormat";
        case Errc::CorruptHeader: return "CorruptHeader";
        case Errc::EmptySignal: return "EmptySignal";
        case Errc::TooFewFrames: return "TooFewFrames";
        case Errc::BadConfig: return "BadConfig";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::AgeOutOfRange: return "AgeOutOfRange";
        case Errc::UnknownWord: return "UnknownWord";
        case Errc::UnknownSpeaker: return "UnknownSpeaker";
        case Errc::DuplicateUtteranceId: return "DuplicateUtteranceId";
        case Errc::TooFewRecordings: return "TooFewRecordings";
        case Errc::UnknownKeyword: return "UnknownKeyword";
        case Errc::EmptySequence: return "EmptySequence";
        case Errc::DimMismatch: return "DimMismatch";
        case Errc::EmptyTemplateStore: return "EmptyTemplateStore";
        case Errc::NotRejected: return "NotRejected";
        case Errc::EmptyLexicon: return "EmptyLexicon";
        case Errc::EmptyAgenda: return "EmptyAgenda";
        case Errc::DuplicateHandlerName: return "DuplicateHandlerName";
        case Errc::SessionFinished: return "SessionFinished";
        case Errc::UnknownSession: return "UnknownSession";
        case Errc::UnknownIntent: return "UnknownIntent";
        case Errc::MissingSlot: return "MissingSlot";
        case Errc::UnmappedGrapheme: return "UnmappedGrapheme";
        case Errc::NoTemplates: return "NoTemplates";
        case Errc::EmptySplit: return "EmptySplit";
        case Errc::IoError: return "IoError";
        case Errc::ParseError: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace kidvoice
