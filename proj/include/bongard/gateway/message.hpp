#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bongard/core/errors.hpp"
#include "bongard/core/types.hpp"

namespace bongard::gateway {

using core::ImageRef;
using json = nlohmann::ordered_json;

enum class Role { System, User, Assistant };

inline std::string to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

inline Role role_from_string(const std::string& s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  throw core::SchemaError("unknown role: " + s);
}

struct MessagePart {
  enum class Kind { Text, Image };
  Kind kind = Kind::Text;
  std::string text;
  ImageRef image;
};

inline MessagePart text_part(std::string text) {
  MessagePart p;
  p.kind = MessagePart::Kind::Text;
  p.text = std::move(text);
  return p;
}

inline MessagePart image_part(ImageRef ref) {
  MessagePart p;
  p.kind = MessagePart::Kind::Image;
  p.image = std::move(ref);
  return p;
}

struct Message {
  Role role = Role::User;
  std::vector<MessagePart> parts;

  int image_count() const {
    int n = 0;
    for (const auto& p : parts)
      if (p.kind == MessagePart::Kind::Image) ++n;
    return n;
  }

  std::vector<std::string> image_digests() const {
    std::vector<std::string> out;
    for (const auto& p : parts)
      if (p.kind == MessagePart::Kind::Image) out.push_back(p.image.digest);
    return out;
  }

  // All text parts joined; what parsers and matchers look at.
  std::string text() const {
    std::string out;
    for (const auto& p : parts)
      if (p.kind == MessagePart::Kind::Text) {
        if (!out.empty()) out += "\n";
        out += p.text;
      }
    return out;
  }
};

inline Message user_message(std::vector<MessagePart> parts) {
  Message m;
  m.role = Role::User;
  m.parts = std::move(parts);
  return m;
}

inline Message user_text(std::string text) { return user_message({text_part(std::move(text))}); }

inline Message assistant_text(std::string text) {
  Message m;
  m.role = Role::Assistant;
  m.parts = {text_part(std::move(text))};
  return m;
}

// include_locations=false yields the canonical form used for cache keys:
// images reduce to digest + media type, so moving a file never changes keys.
inline json message_to_json(const Message& m, bool include_locations = true) {
  json parts = json::array();
  for (const auto& p : m.parts) {
    if (p.kind == MessagePart::Kind::Text) {
      parts.push_back({{"text", p.text}});
    } else {
      json img = {{"digest", p.image.digest}, {"media_type", p.image.media_type}};
      if (include_locations) {
        img["id"] = p.image.id;
        img["location"] = p.image.location;
      }
      parts.push_back({{"image", img}});
    }
  }
  return json{{"role", to_string(m.role)}, {"parts", parts}};
}

inline Message message_from_json(const json& j) {
  Message m;
  m.role = role_from_string(j.at("role").get<std::string>());
  for (const auto& pj : j.at("parts")) {
    if (pj.contains("text")) {
      m.parts.push_back(text_part(pj.at("text").get<std::string>()));
    } else {
      const auto& img = pj.at("image");
      ImageRef ref;
      ref.digest = img.value("digest", std::string{});
      ref.media_type = img.value("media_type", std::string{});
      ref.id = img.value("id", std::string{});
      ref.location = img.value("location", std::string{});
      m.parts.push_back(image_part(std::move(ref)));
    }
  }
  return m;
}

// A dialog transcript bound to one endpoint. History is append-only and
// alternates User/Assistant after the optional leading System message.
struct SessionContext {
  std::string id;
  std::string endpoint_tag;
  std::vector<Message> history;

  void append(Message m) {
    Role expected = next_role();
    if (m.role != expected)
      throw core::Error("session " + id + ": expected " + to_string(expected) + " message, got " +
                        to_string(m.role));
    if (m.parts.empty()) throw core::Error("session " + id + ": message with no parts");
    if (m.role == Role::Assistant)
      for (const auto& p : m.parts)
        if (p.kind != MessagePart::Kind::Text)
          throw core::Error("session " + id + ": assistant messages are text-only");
    history.push_back(std::move(m));
  }

  Role next_role() const {
    std::size_t turns = history.size();
    if (turns > 0 && history.front().role == Role::System) --turns;
    return turns % 2 == 0 ? Role::User : Role::Assistant;
  }

  int assistant_count() const {
    int n = 0;
    for (const auto& m : history)
      if (m.role == Role::Assistant) ++n;
    return n;
  }

  const Message* last_assistant() const {
    for (auto it = history.rbegin(); it != history.rend(); ++it)
      if (it->role == Role::Assistant) return &*it;
    return nullptr;
  }
};

inline json session_to_json(const SessionContext& s, bool include_locations = true) {
  json msgs = json::array();
  for (const auto& m : s.history) msgs.push_back(message_to_json(m, include_locations));
  return json{{"id", s.id}, {"endpoint", s.endpoint_tag}, {"messages", msgs}};
}

}  // namespace bongard::gateway
