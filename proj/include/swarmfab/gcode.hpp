#pragma once

// G-code parsing and interpretation into straight-line motion segments.
//
// Supported dialect: G0 G1 G2 G3 G17 G20 G21 G28 G90 G91 G92, M82 M83.
// Any other M code is passed through as a metadata event. Arcs are in the
// XY plane only. Feed words are mm/min (or inch/min) in the source and mm/s
// everywhere else.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swarmfab/error.hpp"
#include "swarmfab/format.hpp"
#include "swarmfab/geometry.hpp"

namespace swarmfab::gcode {

enum class ErrorKind {
  UnknownWord,
  DuplicateParam,
  MalformedNumber,
  MissingCommand,
  MultipleCommands,
  UnterminatedComment,
  UnsupportedGCode,
  MotionBeforeHome,
  InconsistentArc,
  DegenerateArc,
  InvalidArgument,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::UnknownWord: return "UnknownWord";
    case ErrorKind::DuplicateParam: return "DuplicateParam";
    case ErrorKind::MalformedNumber: return "MalformedNumber";
    case ErrorKind::MissingCommand: return "MissingCommand";
    case ErrorKind::MultipleCommands: return "MultipleCommands";
    case ErrorKind::UnterminatedComment: return "UnterminatedComment";
    case ErrorKind::UnsupportedGCode: return "UnsupportedGCode";
    case ErrorKind::MotionBeforeHome: return "MotionBeforeHome";
    case ErrorKind::InconsistentArc: return "InconsistentArc";
    case ErrorKind::DegenerateArc: return "DegenerateArc";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "?";
}

class GcodeError : public Error {
 public:
  GcodeError(ErrorKind kind, int line, const std::string& detail)
      : Error("line " + std::to_string(line) + ": " + to_string(kind) + ": " + detail),
        kind_(kind),
        line_(line) {}

  ErrorKind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  ErrorKind kind_;
  int line_;
};

struct GcodeCommand {
  int line_no = 1;
  char letter = 'G';  // 'G' or 'M'
  int code = 0;
  std::map<char, double> params;
  std::optional<std::string> comment;

  bool has(char p) const { return params.count(p) != 0; }
  std::optional<double> get(char p) const {
    auto it = params.find(p);
    if (it == params.end()) return std::nullopt;
    return it->second;
  }
  bool operator==(const GcodeCommand&) const = default;
};

enum class LineKind { Blank, Comment, Command };

struct ParsedLine {
  LineKind kind = LineKind::Blank;
  GcodeCommand command;  // meaningful only for LineKind::Command
  std::string comment;
};

namespace detail {

inline bool is_param_letter(char c) {
  switch (c) {
    case 'X': case 'Y': case 'Z': case 'E': case 'F':
    case 'I': case 'J': case 'R': case 'S': case 'P':
      return true;
    default:
      return false;
  }
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// Scans [+-]?(digits(.digits*)?|.digits) starting at `pos`. Returns the
// length of the lexeme, or 0 if none.
inline std::size_t scan_number(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++digits;
  }
  return digits == 0 ? 0 : i - pos;
}

}  // namespace detail

// Parses one source line (no terminator). Letters are case-insensitive;
// `;` comments run to end of line, `( ... )` comments are inline.
inline ParsedLine parse_line(std::string_view text, int line_no = 1) {
  using detail::is_space;
  ParsedLine out;
  std::vector<std::string> comments;
  std::optional<GcodeCommand> cmd;
  std::map<char, double> params;

  auto fail = [&](ErrorKind k, const std::string& what) -> void {
    throw GcodeError(k, line_no, what);
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == ';') {
      comments.push_back(detail::trim(text.substr(i + 1)));
      break;
    }
    if (c == '(') {
      const auto close = text.find(')', i + 1);
      if (close == std::string_view::npos) fail(ErrorKind::UnterminatedComment, "missing ')'");
      comments.push_back(detail::trim(text.substr(i + 1, close - i - 1)));
      i = close + 1;
      continue;
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) {
      fail(ErrorKind::UnknownWord, std::string("unexpected character '") + c + "'");
    }
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const bool is_command = letter == 'G' || letter == 'M';
    if (!is_command && !detail::is_param_letter(letter)) {
      fail(ErrorKind::UnknownWord, std::string("word '") + letter + "'");
    }
    ++i;
    const std::size_t len = detail::scan_number(text, i);
    if (len == 0) fail(ErrorKind::MalformedNumber, std::string("no number after '") + letter + "'");
    std::string_view lexeme = text.substr(i, len);
    i += len;
    if (i < text.size() && (text[i] == '.' || std::isdigit(static_cast<unsigned char>(text[i])))) {
      fail(ErrorKind::MalformedNumber, std::string("bad number after '") + letter + "'");
    }

    if (is_command) {
      if (cmd) fail(ErrorKind::MultipleCommands, "more than one G/M word");
      int code = 0;
      auto [p, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), code);
      if (ec != std::errc{} || p != lexeme.data() + lexeme.size() || code < 0) {
        fail(ErrorKind::MalformedNumber, std::string("command code '") + std::string(lexeme) + "'");
      }
      cmd.emplace();
      cmd->line_no = line_no;
      cmd->letter = letter;
      cmd->code = code;
      continue;
    }

    if (params.count(letter)) fail(ErrorKind::DuplicateParam, std::string("parameter '") + letter + "'");
    std::string_view digits = lexeme;
    if (digits.front() == '+') digits.remove_prefix(1);
    double value = 0.0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || p != digits.data() + digits.size() || !std::isfinite(value)) {
      fail(ErrorKind::MalformedNumber, std::string("value '") + std::string(lexeme) + "'");
    }
    params.emplace(letter, value);
  }

  std::string joined;
  for (const auto& s : comments) {
    if (s.empty()) continue;
    if (!joined.empty()) joined += ' ';
    joined += s;
  }

  if (!cmd) {
    if (!params.empty()) fail(ErrorKind::MissingCommand, "parameters without a G or M word");
    out.kind = comments.empty() ? LineKind::Blank : LineKind::Comment;
    out.comment = joined;
    return out;
  }
  cmd->params = std::move(params);
  if (!comments.empty()) cmd->comment = joined;
  out.kind = LineKind::Command;
  out.command = std::move(*cmd);
  out.comment = joined;
  return out;
}

// Parses a whole file (LF or CRLF). Blank and comment-only lines are skipped;
// line numbers are 1-based source lines.
inline std::vector<GcodeCommand> parse_program(std::string_view text) {
  std::vector<GcodeCommand> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ParsedLine parsed = parse_line(line, line_no);
    if (parsed.kind == LineKind::Command) out.push_back(std::move(parsed.command));
    pos = nl + 1;
  }
  return out;
}

// Writes one command per line in a form parse_program accepts.
inline std::string serialize(std::span<const GcodeCommand> commands) {
  std::string out;
  for (const auto& c : commands) {
    out += c.letter;
    out += std::to_string(c.code);
    for (const auto& [k, v] : c.params) {
      out += ' ';
      out += k;
      out += shortest_fixed(v);
    }
    if (c.comment) {
      out += " ; ";
      out += *c.comment;
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interpretation

enum class Positioning { Absolute, Relative };
enum class Units { Millimetres, Inches };
enum class SegmentKind { Travel, Print };

inline constexpr double kDefaultFeed = 20.0;  // mm/s
inline constexpr double kInch = 25.4;

struct InterpreterState {
  Vec3 position;                 // machine frame, mm
  double extrusion_total = 0.0;  // filament deposited so far, mm (never rebound)
  double e_axis = 0.0;           // E coordinate as the program sees it
  double feed = kDefaultFeed;    // mm/s
  Positioning positioning = Positioning::Absolute;
  Positioning extrusion_mode = Positioning::Absolute;
  Units units = Units::Millimetres;
  Vec3 datum;  // program coordinate = machine coordinate - datum (G92)
  bool homed = false;
};

struct InterpretOptions {
  Vec3 home{};
  double chord_tol = 0.01;           // mm, arc flattening
  double arc_radius_tol = 1e-6;      // relative end-radius mismatch allowed
  bool require_home = false;
};

struct MotionSegment {
  Vec3 start;
  Vec3 end;
  double feed = kDefaultFeed;    // mm/s
  double extrusion_delta = 0.0;  // mm, > 0 iff kind == Print
  SegmentKind kind = SegmentKind::Travel;
  int source_line = 0;

  double length() const { return distance(start, end); }
  bool operator==(const MotionSegment&) const = default;
};

struct MetadataEvent {
  int source_line = 0;
  char letter = 'M';
  int code = 0;
  std::map<char, double> params;
  std::size_t segment_index = 0;  // number of segments emitted before it
};

struct Interpretation {
  std::vector<MotionSegment> segments;
  std::vector<MetadataEvent> events;
  InterpreterState final_state;
};

namespace detail {

inline double unit_scale(const InterpreterState& s) {
  return s.units == Units::Inches ? kInch : 1.0;
}

struct ResolvedMove {
  Vec3 target;
  double e_delta = 0.0;
  double e_axis = 0.0;
  double feed = kDefaultFeed;
};

inline ResolvedMove resolve_move(const GcodeCommand& cmd, const InterpreterState& s) {
  const double k = unit_scale(s);
  ResolvedMove m;
  m.target = s.position;
  auto axis = [&](char letter, double cur, double datum) {
    auto v = cmd.get(letter);
    if (!v) return cur;
    return s.positioning == Positioning::Absolute ? *v * k + datum : cur + *v * k;
  };
  m.target.x = axis('X', s.position.x, s.datum.x);
  m.target.y = axis('Y', s.position.y, s.datum.y);
  m.target.z = axis('Z', s.position.z, s.datum.z);

  m.e_axis = s.e_axis;
  if (auto e = cmd.get('E')) {
    const double v = *e * k;
    if (s.extrusion_mode == Positioning::Absolute) {
      m.e_delta = v - s.e_axis;
      m.e_axis = v;
    } else {
      m.e_delta = v;
      m.e_axis = s.e_axis + v;
    }
  }

  m.feed = s.feed;
  if (auto f = cmd.get('F')) {
    if (!(*f > 0.0)) throw GcodeError(ErrorKind::InvalidArgument, cmd.line_no, "feed must be positive");
    m.feed = *f * k / 60.0;
  }
  return m;
}

}  // namespace detail

// Number of chords used for an arc of `sweep` radians at radius `radius`.
// n = max(1, ceil(sweep / (2 acos(1 - tol / r)))), and an arc of a half turn
// or more is split into at least floor(sweep / pi) + 1 chords so no chord
// passes through the centre.
inline std::size_t arc_segment_count(double sweep, double radius, double chord_tol) {
  const double ratio = std::clamp(1.0 - chord_tol / radius, -1.0, 1.0);
  const double step = 2.0 * std::acos(ratio);
  auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(sweep / step)));
  const auto half_turns = static_cast<std::size_t>(std::floor(sweep / std::numbers::pi + 1e-9));
  return std::max(n, half_turns + 1);
}

// Flattens a G2 (clockwise) or G3 (counter-clockwise) arc into chords whose
// deviation from the true arc is at most chord_tol. The centre comes from I/J
// (offsets from the start) or from R (positive: short arc, negative: long
// arc). I/J with the end equal to the start is a full circle. Z moves
// linearly along the arc; E is spread evenly over the chords.
inline std::vector<MotionSegment> flatten_arc(const GcodeCommand& cmd, const InterpreterState& state,
                                              double chord_tol, double radius_tol = 1e-6) {
  const int line = cmd.line_no;
  if (cmd.letter != 'G' || (cmd.code != 2 && cmd.code != 3)) {
    throw GcodeError(ErrorKind::InvalidArgument, line, "flatten_arc needs G2 or G3");
  }
  if (!(chord_tol > 0.0)) throw GcodeError(ErrorKind::InvalidArgument, line, "chord_tol must be positive");

  const bool clockwise = cmd.code == 2;
  const auto move = detail::resolve_move(cmd, state);
  const Vec3 start = state.position;
  const Vec3 end = move.target;
  const double k = detail::unit_scale(state);
  const Vec2 s2 = start.xy();
  const Vec2 e2 = end.xy();

  Vec2 center;
  double radius = 0.0;
  bool full_circle = false;
  if (cmd.has('I') || cmd.has('J')) {
    center = s2 + Vec2{cmd.get('I').value_or(0.0) * k, cmd.get('J').value_or(0.0) * k};
    radius = distance(s2, center);
    if (!(radius > 0.0)) throw GcodeError(ErrorKind::DegenerateArc, line, "zero radius");
    const double end_radius = distance(e2, center);
    if (std::abs(end_radius - radius) > radius_tol * radius) {
      throw GcodeError(ErrorKind::InconsistentArc, line,
                       "start radius " + fixed(radius) + " vs end radius " + fixed(end_radius));
    }
    full_circle = s2 == e2;
  } else if (auto r = cmd.get('R')) {
    radius = std::abs(*r * k);
    if (!(radius > 0.0)) throw GcodeError(ErrorKind::DegenerateArc, line, "zero radius");
    const Vec2 chord = e2 - s2;
    const double d = norm(chord);
    if (d == 0.0) throw GcodeError(ErrorKind::DegenerateArc, line, "R form cannot describe a full circle");
    double h2 = radius * radius - 0.25 * d * d;
    if (h2 < 0.0) {
      if (0.5 * d - radius > radius_tol * radius) {
        throw GcodeError(ErrorKind::InconsistentArc, line, "radius smaller than half the chord");
      }
      h2 = 0.0;
    }
    const Vec2 right{chord.y / d, -chord.x / d};
    // Clockwise short arcs have their centre to the right of the chord.
    const double side = (clockwise == (*r > 0.0)) ? 1.0 : -1.0;
    center = (s2 + e2) * 0.5 + right * (side * std::sqrt(h2));
  } else {
    throw GcodeError(ErrorKind::DegenerateArc, line, "arc needs I/J or R");
  }

  const double a0 = std::atan2(s2.y - center.y, s2.x - center.x);
  const double a1 = std::atan2(e2.y - center.y, e2.x - center.x);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double sweep = two_pi;
  if (!full_circle) {
    sweep = std::fmod(clockwise ? a0 - a1 : a1 - a0, two_pi);
    if (sweep <= 0.0) sweep += two_pi;
  }
  const double dir = clockwise ? -1.0 : 1.0;

  const std::size_t n = arc_segment_count(sweep, radius, chord_tol);
  const bool print = cmd.letter == 'G' && move.e_delta > 0.0;
  const double e_piece = print ? move.e_delta / static_cast<double>(n) : 0.0;

  std::vector<MotionSegment> out;
  out.reserve(n);
  Vec3 prev = start;
  double e_used = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    Vec3 p = end;
    if (i < n) {
      const double s = static_cast<double>(i) / static_cast<double>(n);
      const double a = a0 + dir * sweep * s;
      p = {center.x + radius * std::cos(a), center.y + radius * std::sin(a), start.z + (end.z - start.z) * s};
    }
    MotionSegment seg;
    seg.start = prev;
    seg.end = p;
    seg.feed = move.feed;
    seg.source_line = line;
    if (print) {
      seg.kind = SegmentKind::Print;
      seg.extrusion_delta = i < n ? e_piece : move.e_delta - e_used;
      e_used += seg.extrusion_delta;
    }
    out.push_back(seg);
    prev = p;
  }
  return out;
}

// Runs the program from `initial`, producing chained segments. M codes other
// than M82/M83 become metadata events.
inline Interpretation interpret(std::span<const GcodeCommand> commands, const InterpreterState& initial,
                                const InterpretOptions& opts = {}) {
  Interpretation out;
  InterpreterState s = initial;

  auto require_homed = [&](const GcodeCommand& c) {
    if (opts.require_home && !s.homed) {
      throw GcodeError(ErrorKind::MotionBeforeHome, c.line_no, "motion before G28");
    }
  };

  for (const auto& c : commands) {
    if (c.letter == 'M') {
      switch (c.code) {
        case 82: s.extrusion_mode = Positioning::Absolute; break;
        case 83: s.extrusion_mode = Positioning::Relative; break;
        default:
          out.events.push_back({c.line_no, c.letter, c.code, c.params, out.segments.size()});
      }
      continue;
    }

    switch (c.code) {
      case 0:
      case 1: {
        require_homed(c);
        const auto m = detail::resolve_move(c, s);
        const bool print = c.code == 1 && m.e_delta > 0.0;
        if (m.target != s.position || print) {
          MotionSegment seg{s.position, m.target, m.feed, print ? m.e_delta : 0.0,
                            print ? SegmentKind::Print : SegmentKind::Travel, c.line_no};
          out.segments.push_back(seg);
        }
        if (print) s.extrusion_total += m.e_delta;
        s.position = m.target;
        s.e_axis = m.e_axis;
        s.feed = m.feed;
        break;
      }
      case 2:
      case 3: {
        require_homed(c);
        const auto m = detail::resolve_move(c, s);
        auto pieces = flatten_arc(c, s, opts.chord_tol, opts.arc_radius_tol);
        for (const auto& p : pieces) {
          s.extrusion_total += p.extrusion_delta;
          out.segments.push_back(p);
        }
        s.position = m.target;
        s.e_axis = m.e_axis;
        s.feed = m.feed;
        break;
      }
      case 17:
        break;
      case 20: s.units = Units::Inches; break;
      case 21: s.units = Units::Millimetres; break;
      case 28: {
        const bool any = c.has('X') || c.has('Y') || c.has('Z');
        Vec3 target = s.position;
        if (!any || c.has('X')) target.x = opts.home.x;
        if (!any || c.has('Y')) target.y = opts.home.y;
        if (!any || c.has('Z')) target.z = opts.home.z;
        if (auto f = c.get('F')) {
          if (!(*f > 0.0)) throw GcodeError(ErrorKind::InvalidArgument, c.line_no, "feed must be positive");
          s.feed = *f * detail::unit_scale(s) / 60.0;
        }
        if (target != s.position) {
          out.segments.push_back({s.position, target, s.feed, 0.0, SegmentKind::Travel, c.line_no});
        }
        s.position = target;
        s.homed = true;
        break;
      }
      case 90: s.positioning = Positioning::Absolute; break;
      case 91: s.positioning = Positioning::Relative; break;
      case 92: {
        const double k = detail::unit_scale(s);
        const bool any = c.has('X') || c.has('Y') || c.has('Z') || c.has('E');
        auto rebind = [&](char letter, double pos, double& datum) {
          if (auto v = c.get(letter)) datum = pos - *v * k;
          else if (!any) datum = pos;
        };
        rebind('X', s.position.x, s.datum.x);
        rebind('Y', s.position.y, s.datum.y);
        rebind('Z', s.position.z, s.datum.z);
        if (auto e = c.get('E')) s.e_axis = *e * k;
        else if (!any) s.e_axis = 0.0;
        break;
      }
      default:
        throw GcodeError(ErrorKind::UnsupportedGCode, c.line_no, "G" + std::to_string(c.code));
    }
  }
  out.final_state = s;
  return out;
}

}  // namespace swarmfab::gcode
