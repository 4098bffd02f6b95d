#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "tokfuse/prob_vector.hpp"

namespace tokfuse::wire {

// Step server protocol v1. Every operation is an HTTP POST to /v1/<op> with a JSON body:
//
//   create_session  {"prompt_ids": [int]}           -> {"session_id": string}
//   step            {"session_id": string}          -> {"probs": [float]}
//                                                   or {"topk": [[id, float]], "rest_mass": float}
//   append          {"session_id": string, "ids": [int]} -> {"prefix_len": int}
//   vocab           {}                              -> portable vocab file body (text/plain)
//
// Failures answer {"error": {"code": string, "message": string}}.

inline constexpr std::string_view kPathPrefix = "/v1/";
inline constexpr int kVersion = 1;

namespace code {
inline constexpr std::string_view kSessionNotFound = "session_not_found";
inline constexpr std::string_view kBadIds = "bad_ids";
inline constexpr std::string_view kInternal = "internal";
}  // namespace code

/// Maximum |sum - 1| a client accepts from a peer before raising ProtocolError.
inline constexpr double kPeerSimplexTolerance = 1e-4;

/// Dense body, or sparse body with the `top_k` most probable IDs (ties by lower ID) and
/// the remaining mass. Floats are written with round-trip precision.
std::string encode_step_response(const ProbVector& probs, std::optional<std::size_t> top_k = std::nullopt);

/// Decodes either step body form over a vocabulary of `vocab_size`. In the sparse form
/// rest_mass is spread uniformly over the unlisted IDs. Throws ProtocolError on an error
/// object, malformed payload, or a sum further than kPeerSimplexTolerance from 1.
ProbVector decode_step_response(std::string_view body, std::size_t vocab_size);

std::string encode_error(std::string_view code, std::string_view message);

}  // namespace tokfuse::wire
