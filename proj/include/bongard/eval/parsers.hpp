#pragma once

#include <cctype>
#include <optional>
#include <string>

#include <json.hpp>

#include "bongard/core/types.hpp"

namespace bongard::eval {

enum class OkWrong { Ok, Wrong, Unparseable };

inline std::string to_string(OkWrong v) {
  switch (v) {
    case OkWrong::Ok: return "ok";
    case OkWrong::Wrong: return "wrong";
    case OkWrong::Unparseable: return "unparseable";
  }
  return "unparseable";
}

inline OkWrong ok_wrong_from_string(const std::string& s) {
  if (s == "ok") return OkWrong::Ok;
  if (s == "wrong") return OkWrong::Wrong;
  return OkWrong::Unparseable;
}

namespace detail {

inline bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Case-insensitive whole-word occurrence ("OK" matches "EVALUATION: OK."
// but not "LOOK" or "OKAY").
inline bool contains_token(const std::string& text, const std::string& token) {
  if (token.empty()) return false;
  auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
  for (std::size_t i = 0; i + token.size() <= text.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < token.size(); ++j)
      if (lower(text[i + j]) != lower(token[j])) {
        match = false;
        break;
      }
    if (!match) continue;
    bool left_ok = i == 0 || !word_char(text[i - 1]);
    bool right_ok = i + token.size() == text.size() || !word_char(text[i + token.size()]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

inline std::string trim(std::string s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

// Judge / label-check reply parser. Total: every string maps to exactly one
// of Ok / Wrong / Unparseable. A reply counts only when exactly one of the
// two tokens appears (as a whole word, any case, "EVALUATION:" prefixes and
// punctuation tolerated).
inline OkWrong parse_ok_wrong(const std::string& reply) {
  bool has_ok = detail::contains_token(reply, "OK");
  bool has_wrong = detail::contains_token(reply, "WRONG");
  if (has_ok == has_wrong) return OkWrong::Unparseable;
  return has_ok ? OkWrong::Ok : OkWrong::Wrong;
}

struct FilterReply {
  bool accepted = false;
  bool flagged = false;  // reply did not match either documented format
  std::string explanation;
};

// Image-filter reply parser: "EVALUATION: OK" vs "EVALUATION: REJECTED",
// explanation text captured. Anything else is a flagged rejection.
inline FilterReply parse_filter_reply(const std::string& reply) {
  FilterReply out;
  bool has_ok = detail::contains_token(reply, "OK");
  bool has_rejected = detail::contains_token(reply, "REJECTED");
  if (has_ok == has_rejected) {
    out.flagged = true;
  } else {
    out.accepted = has_ok;
  }
  static constexpr const char* kTag = "EXPLANATION:";
  std::size_t pos = reply.find(kTag);
  if (pos != std::string::npos) out.explanation = detail::trim(reply.substr(pos + std::strlen(kTag)));
  return out;
}

// First balanced top-level JSON value opening with `open` ('{' or '[').
// Skips string contents and escapes; models wrap JSON in prose and fences,
// so anything before and after the balanced span is ignored.
inline std::optional<std::string> extract_first_json(const std::string& text, char open = '{') {
  char close = open == '{' ? '}' : ']';
  std::size_t start = text.find(open);
  while (start != std::string::npos) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          in_string = false;
        }
      } else if (c == '"') {
        in_string = true;
      } else if (c == open) {
        ++depth;
      } else if (c == close) {
        if (--depth == 0) return text.substr(start, i - start + 1);
      }
    }
    start = text.find(open, start + 1);
  }
  return std::nullopt;
}

struct SidesReply {
  std::optional<core::Side> first;
  std::optional<core::Side> second;
  bool parseable() const { return first && second; }
};

// Images-to-Sides reply: first balanced object, keys "first"/"second", each
// with an "answer" of LEFT or RIGHT. Any defect leaves that slot unset.
// strict mode requires the whole reply to be the JSON object, no prose or
// fences around it.
inline SidesReply parse_sides_reply(const std::string& reply, bool strict = false) {
  SidesReply out;
  std::optional<std::string> blob;
  if (strict) {
    std::string trimmed = detail::trim(reply);
    if (trimmed.empty() || trimmed.front() != '{' || trimmed.back() != '}') return out;
    blob = trimmed;
  } else {
    blob = extract_first_json(reply, '{');
  }
  if (!blob) return out;
  nlohmann::json doc = nlohmann::json::parse(*blob, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) return out;
  auto read = [&doc](const char* key) -> std::optional<core::Side> {
    if (!doc.contains(key)) return std::nullopt;
    const auto& slot = doc.at(key);
    std::string answer;
    if (slot.is_object())
      answer = slot.value("answer", std::string{});
    else if (slot.is_string())
      answer = slot.get<std::string>();
    return core::side_from_wire(answer);
  };
  out.first = read("first");
  out.second = read("second");
  return out;
}

}  // namespace bongard::eval
