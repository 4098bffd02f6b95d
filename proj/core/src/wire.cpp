#include "tokfuse/wire.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "tokfuse/errors.hpp"

namespace tokfuse::wire {

using nlohmann::json;

std::string encode_step_response(const ProbVector& probs, std::optional<std::size_t> top_k) {
  json out;
  if (!top_k || *top_k >= probs.size()) {
    out["probs"] = std::vector<double>(probs.values().begin(), probs.values().end());
    return out.dump();
  }
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(*top_k), order.end(),
                    [&](std::size_t a, std::size_t b) { return probs[a] > probs[b] || (probs[a] == probs[b] && a < b); });
  json topk = json::array();
  double listed = 0.0;
  for (std::size_t i = 0; i < *top_k; ++i) {
    topk.push_back(json::array({order[i], probs[order[i]]}));
    listed += probs[order[i]];
  }
  out["topk"] = std::move(topk);
  out["rest_mass"] = std::max(0.0, 1.0 - listed);
  return out.dump();
}

ProbVector decode_step_response(std::string_view body, std::size_t vocab_size) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ProtocolError(std::string(code::kInternal), "step response is not a JSON object");
  if (doc.contains("error")) {
    const auto& e = doc["error"];
    throw ProtocolError(e.value("code", std::string(code::kInternal)), e.value("message", std::string()));
  }

  std::vector<double> values;
  try {
    if (doc.contains("probs")) {
      values = doc.at("probs").get<std::vector<double>>();
      if (values.size() != vocab_size) {
        throw ProtocolError(std::string(code::kInternal), "peer sent " + std::to_string(values.size()) +
                                                              " probabilities for a vocabulary of " +
                                                              std::to_string(vocab_size));
      }
    } else if (doc.contains("topk")) {
      values.assign(vocab_size, -1.0);
      std::size_t listed = 0;
      for (const auto& entry : doc.at("topk")) {
        const auto id = entry.at(0).get<std::size_t>();
        if (id >= vocab_size || values[id] >= 0.0) throw ProtocolError(std::string(code::kInternal), "bad sparse id");
        values[id] = entry.at(1).get<double>();
        ++listed;
      }
      const double rest = doc.at("rest_mass").get<double>();
      const std::size_t unlisted = vocab_size - listed;
      const double share = unlisted > 0 ? rest / static_cast<double>(unlisted) : 0.0;
      for (auto& v : values) {
        if (v < 0.0) v = share;
      }
    } else {
      throw ProtocolError(std::string(code::kInternal), "step response has neither probs nor topk");
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string(code::kInternal), std::string("malformed step response: ") + e.what());
  }

  double total = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw ProtocolError(std::string(code::kInternal), "peer sent an invalid probability");
    total += v;
  }
  if (std::abs(total - 1.0) > kPeerSimplexTolerance) {
    throw ProtocolError(std::string(code::kInternal), "peer distribution sums to " + std::to_string(total));
  }
  // Only rescale when outside the local tolerance so exact payloads stay bit-identical.
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    for (auto& v : values) v /= total;
  }
  return ProbVector::trusted(std::move(values));
}

std::string encode_error(std::string_view code, std::string_view message) {
  json out;
  out["error"] = {{"code", std::string(code)}, {"message", std::string(message)}};
  return out.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace tokfuse::wire
