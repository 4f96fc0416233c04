#pragma once

#include <concepts>
#include <cstdint>
#include <string>

namespace kidvoice {

/// An unrecognized utterance linked to the keyword it was closest to and the
/// dialog context (handler name) in which it occurred.
struct AssociationEntry {
    std::string utterance_id;  ///< most recent utterance for this pair
    std::string keyword;
    std::string context;
    std::int64_t count = 1;
    std::int64_t timestamp = 0;  ///< ms since epoch of the most recent event

    friend bool operator==(const AssociationEntry&, const AssociationEntry&) = default;
};

/// Anything that can persist an association (the speech database, a mock).
template <class T>
concept AssociationRecorder = requires(T& store, const std::string& s) {
    { store.record_association(s, s, s) } -> std::convertible_to<AssociationEntry>;
};

}  // namespace kidvoice
