#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crahn/geometry.hpp"
#include "crahn/sim_time.hpp"
#include "crahn/simulator.hpp"

namespace crahn {

enum class SituationStatus { Green, Yellow, Red };

std::string_view to_string(SituationStatus s);
/// Throws XmlInvalidStatus for anything but green/yellow/red.
SituationStatus parse_status(std::string_view text);

struct SituationRecord {
  Vec2 location;  // meters
  SituationStatus status = SituationStatus::Green;
  SimTime timestamp;
  std::string short_msg;
  std::string detail_msg;

  friend bool operator==(const SituationRecord&, const SituationRecord&) = default;
};

/// Canonical encoding: fixed element order, coordinates and timestamp with
/// three decimals, no whitespace between elements, XML-escaped text.
///
///   <situation><location x="120.500" y="88.000"/><status>red</status>
///   <timestamp>42.125</timestamp><short>help</short><detail>...</detail></situation>
///
/// (shown wrapped; the encoding is a single line)
std::string encode_situation(const SituationRecord& rec);

/// Strict parser for the canonical encoding. Throws XmlMalformed or
/// XmlInvalidStatus.
SituationRecord parse_situation(std::string_view xml);

/// One node's situation database, deduplicated by (origin, timestamp).
class SituationStore {
 public:
  /// False if the (origin, timestamp) key is already present.
  bool insert(NodeId origin, const SituationRecord& rec);
  bool contains(NodeId origin, SimTime timestamp) const;
  std::size_t size() const { return records_.size(); }

  /// Records with the given status (or any status), newest first; ties by origin.
  std::vector<SituationRecord> query(std::optional<SituationStatus> status = std::nullopt,
                                     SimTime since = {}) const;

 private:
  std::map<std::pair<NodeId, std::int64_t>, SituationRecord> records_;
};

}  // namespace crahn
