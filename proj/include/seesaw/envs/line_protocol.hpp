#pragma once

// Newline-delimited text protocol between the trainer and an environment
// process (trainer writes the child's stdin, reads its stdout):
//
//   hello            -> spec name=<token> h=<int> w=<int> actions=<int> max_frames=<int> [floor=<real>]
//   reset <seed>     -> frame <base64>
//   step <action>    -> step reward=<real> done=<0|1> frame=<base64>
//   quit             -> (child exits)
//
// Any request may instead be answered with `error <free text>`. Lines end in
// a single '\n', tokens are separated by single spaces, <seed> is an unsigned
// 64-bit decimal, frames are the H*W*3 row-major RGB bytes in standard
// padded base64.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "seesaw/envs/base64.hpp"
#include "seesaw/envs/environment.hpp"
#include "seesaw/error.hpp"

namespace seesaw::envs::protocol {

inline std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t next = line.find(' ', pos);
    const std::size_t end = next == std::string_view::npos ? line.size() : next;
    if (end > pos) out.push_back(line.substr(pos, end - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

/// Parses `<tag> key=value ...`. Error replies are turned into ProtocolError.
inline std::map<std::string, std::string, std::less<>> parse_record(std::string_view line, std::string_view tag) {
  if (line.substr(0, 6) == "error " || line == "error")
    throw ProtocolError("environment reported: " + std::string(line.size() > 6 ? line.substr(6) : ""));
  const auto tokens = split_spaces(line);
  if (tokens.empty() || tokens[0] != tag)
    throw ProtocolError("expected '" + std::string(tag) + "' record, got '" + std::string(line.substr(0, 40)) + "'");
  std::map<std::string, std::string, std::less<>> fields;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw ProtocolError("field '" + std::string(tokens[i].substr(0, 20)) + "': expected key=value");
    fields.emplace(std::string(tokens[i].substr(0, eq)), std::string(tokens[i].substr(eq + 1)));
  }
  return fields;
}

using Fields = std::map<std::string, std::string, std::less<>>;

inline const std::string& field(const Fields& f, std::string_view key) {
  auto it = f.find(key);
  if (it == f.end()) throw ProtocolError("field '" + std::string(key) + "' missing");
  return it->second;
}

inline long long field_int(const Fields& f, std::string_view key) {
  const auto& v = field(f, key);
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ProtocolError("field '" + std::string(key) + "': expected integer, got '" + v + "'");
  return out;
}

inline double field_real(const Fields& f, std::string_view key) {
  const auto& v = field(f, key);
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(out))
    throw ProtocolError("field '" + std::string(key) + "': expected real, got '" + v + "'");
  return out;
}

inline bool field_bool(const Fields& f, std::string_view key) {
  const auto& v = field(f, key);
  if (v == "0") return false;
  if (v == "1") return true;
  throw ProtocolError("field '" + std::string(key) + "': expected 0 or 1, got '" + v + "'");
}

inline Frame decode_frame(std::string_view b64, int h, int w, std::string_view key) {
  auto bytes = base64::decode(b64);
  if (!bytes) throw ProtocolError("field '" + std::string(key) + "': invalid base64");
  const auto expect = static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * 3;
  if (bytes->size() != expect)
    throw ProtocolError("field '" + std::string(key) + "': " + std::to_string(bytes->size()) +
                        " bytes, expected " + std::to_string(expect));
  Frame f;
  f.height = h;
  f.width = w;
  f.data = std::move(*bytes);
  return f;
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// --- records -------------------------------------------------------------

inline std::string format_spec(const EnvSpec& s) {
  return "spec name=" + s.name + " h=" + std::to_string(s.height) + " w=" + std::to_string(s.width) +
         " actions=" + std::to_string(s.actions) + " max_frames=" + std::to_string(s.max_frames) +
         " floor=" + format_real(s.failure_score);
}

inline EnvSpec parse_spec(std::string_view line) {
  const auto f = parse_record(line, "spec");
  EnvSpec s;
  s.name = field(f, "name");
  s.height = static_cast<int>(field_int(f, "h"));
  s.width = static_cast<int>(field_int(f, "w"));
  s.actions = static_cast<int>(field_int(f, "actions"));
  s.max_frames = static_cast<int>(field_int(f, "max_frames"));
  if (f.contains("floor")) s.failure_score = field_real(f, "floor");
  if (s.height < 1) throw ProtocolError("field 'h': must be positive");
  if (s.width < 1) throw ProtocolError("field 'w': must be positive");
  if (s.actions < 2) throw ProtocolError("field 'actions': must be >= 2");
  if (s.max_frames < 1) throw ProtocolError("field 'max_frames': must be >= 1");
  return s;
}

inline std::string format_frame(const Frame& f) { return "frame " + base64::encode(f.data); }

inline Frame parse_frame(std::string_view line, int h, int w) {
  if (line.substr(0, 6) == "error " || line == "error") parse_record(line, "frame");
  const auto tokens = split_spaces(line);
  if (tokens.size() != 2 || tokens[0] != "frame")
    throw ProtocolError("expected 'frame <base64>', got '" + std::string(line.substr(0, 40)) + "'");
  return decode_frame(tokens[1], h, w, "frame");
}

inline std::string format_step(const StepResult& r) {
  return "step reward=" + format_real(r.reward) + " done=" + (r.done ? "1" : "0") +
         " frame=" + base64::encode(r.frame.data);
}

inline StepResult parse_step(std::string_view line, int h, int w) {
  const auto f = parse_record(line, "step");
  StepResult r;
  r.reward = field_real(f, "reward");
  r.done = field_bool(f, "done");
  r.frame = decode_frame(field(f, "frame"), h, w, "frame");
  return r;
}

/// Server side: answer requests from `in` on `out` until quit or EOF.
inline void serve(Environment& env, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    const auto tokens = split_spaces(line);
    try {
      if (tokens.empty()) {
        out << "error empty request\n";
      } else if (tokens[0] == "hello") {
        out << format_spec(env.spec()) << '\n';
      } else if (tokens[0] == "reset" && tokens.size() == 2) {
        std::uint64_t seed = 0;
        auto [p, ec] = std::from_chars(tokens[1].data(), tokens[1].data() + tokens[1].size(), seed);
        if (ec != std::errc() || p != tokens[1].data() + tokens[1].size()) {
          out << "error bad seed\n";
        } else {
          out << format_frame(env.reset(seed)) << '\n';
        }
      } else if (tokens[0] == "step" && tokens.size() == 2) {
        int action = 0;
        auto [p, ec] = std::from_chars(tokens[1].data(), tokens[1].data() + tokens[1].size(), action);
        if (ec != std::errc() || p != tokens[1].data() + tokens[1].size()) {
          out << "error bad action\n";
        } else {
          out << format_step(env.step(action)) << '\n';
        }
      } else if (tokens[0] == "quit") {
        out.flush();
        return;
      } else {
        out << "error unknown request\n";
      }
    } catch (const std::exception& e) {
      out << "error " << e.what() << '\n';
    }
    out.flush();
  }
}

}  // namespace seesaw::envs::protocol
