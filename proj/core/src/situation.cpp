#include "crahn/situation.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "crahn/error.hpp"

namespace crahn {

std::string_view to_string(SituationStatus s) {
  switch (s) {
    case SituationStatus::Green: return "green";
    case SituationStatus::Yellow: return "yellow";
    case SituationStatus::Red: return "red";
  }
  return "green";
}

SituationStatus parse_status(std::string_view text) {
  if (text == "green") return SituationStatus::Green;
  if (text == "yellow") return SituationStatus::Yellow;
  if (text == "red") return SituationStatus::Red;
  throw Error(ErrorCode::XmlInvalidStatus, "status '" + std::string(text) + "'");
}

namespace {

void append_escaped(std::string& out, std::string_view text) {
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::XmlMalformed, why);
}

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  void expect(std::string_view literal) {
    if (text_.substr(pos_, literal.size()) != literal) {
      malformed("expected '" + std::string(literal) + "' at offset " + std::to_string(pos_));
    }
    pos_ += literal.size();
  }

  std::string_view until(char stop) {
    const auto end = text_.find(stop, pos_);
    if (end == std::string_view::npos) malformed("unterminated content");
    auto out = text_.substr(pos_, end - pos_);
    pos_ = end;
    return out;
  }

  bool at_end() const { return pos_ == text_.size(); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

// "-?digits.ddd" exactly.
void check_fixed3(std::string_view tok) {
  std::size_t i = 0;
  if (i < tok.size() && tok[i] == '-') ++i;
  const std::size_t int_start = i;
  while (i < tok.size() && tok[i] >= '0' && tok[i] <= '9') ++i;
  if (i == int_start || i >= tok.size() || tok[i] != '.') malformed("bad number '" + std::string(tok) + "'");
  ++i;
  const std::size_t frac_start = i;
  while (i < tok.size() && tok[i] >= '0' && tok[i] <= '9') ++i;
  if (i != tok.size() || i - frac_start != 3) malformed("bad number '" + std::string(tok) + "'");
}

double parse_coord(std::string_view tok) {
  check_fixed3(tok);
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size()) malformed("bad number '" + std::string(tok) + "'");
  return v;
}

SimTime parse_timestamp(std::string_view tok) {
  check_fixed3(tok);
  if (tok.front() == '-') malformed("negative timestamp");
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  const auto dot = tok.find('.');
  auto r1 = std::from_chars(tok.data(), tok.data() + dot, whole);
  auto r2 = std::from_chars(tok.data() + dot + 1, tok.data() + tok.size(), frac);
  if (r1.ec != std::errc{} || r2.ec != std::errc{}) malformed("bad timestamp");
  return SimTime::from_ms(whole * 1000 + frac);
}

std::string unescape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '>') malformed("unescaped '>' in text");
    if (c != '&') {
      out += c;
      continue;
    }
    const auto semi = text.find(';', i);
    if (semi == std::string_view::npos) malformed("unterminated entity");
    const auto entity = text.substr(i, semi - i + 1);
    if (entity == "&amp;") out += '&';
    else if (entity == "&lt;") out += '<';
    else if (entity == "&gt;") out += '>';
    else if (entity == "&quot;") out += '"';
    else if (entity == "&apos;") out += '\'';
    else malformed("unknown entity '" + std::string(entity) + "'");
    i = semi;
  }
  return out;
}

}  // namespace

std::string encode_situation(const SituationRecord& rec) {
  std::string out = "<situation><location x=\"";
  out += fixed3(rec.location.x);
  out += "\" y=\"";
  out += fixed3(rec.location.y);
  out += "\"/><status>";
  out += to_string(rec.status);
  out += "</status><timestamp>";
  out += rec.timestamp.str();
  out += "</timestamp><short>";
  append_escaped(out, rec.short_msg);
  out += "</short><detail>";
  append_escaped(out, rec.detail_msg);
  out += "</detail></situation>";
  return out;
}

SituationRecord parse_situation(std::string_view xml) {
  Cursor c(xml);
  SituationRecord rec;
  c.expect("<situation><location x=\"");
  rec.location.x = parse_coord(c.until('"'));
  c.expect("\" y=\"");
  rec.location.y = parse_coord(c.until('"'));
  c.expect("\"/><status>");
  const auto status = c.until('<');
  c.expect("</status><timestamp>");
  rec.timestamp = parse_timestamp(c.until('<'));
  c.expect("</timestamp><short>");
  rec.short_msg = unescape(c.until('<'));
  c.expect("</short><detail>");
  rec.detail_msg = unescape(c.until('<'));
  c.expect("</detail></situation>");
  if (!c.at_end()) malformed("trailing content after </situation>");
  // Structure is checked before the status value so that a well-formed
  // document with a bad status reports XmlInvalidStatus.
  rec.status = parse_status(status);
  return rec;
}

// ---------------------------------------------------------------------------

bool SituationStore::insert(NodeId origin, const SituationRecord& rec) {
  return records_.try_emplace({origin, rec.timestamp.ms()}, rec).second;
}

bool SituationStore::contains(NodeId origin, SimTime timestamp) const {
  return records_.contains({origin, timestamp.ms()});
}

std::vector<SituationRecord> SituationStore::query(std::optional<SituationStatus> status,
                                                   SimTime since) const {
  std::vector<std::pair<NodeId, const SituationRecord*>> hits;
  for (const auto& [key, rec] : records_) {
    if (status && rec.status != *status) continue;
    if (rec.timestamp < since) continue;
    hits.emplace_back(key.first, &rec);
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (a.second->timestamp != b.second->timestamp) return a.second->timestamp > b.second->timestamp;
    return a.first < b.first;
  });
  std::vector<SituationRecord> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(*h.second);
  return out;
}

}  // namespace crahn
