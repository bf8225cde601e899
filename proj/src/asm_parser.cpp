// SPDX-License-Identifier: Apache-2.0
#include "sea/asm_parser.hpp"

#include <array>
#include <fstream>
#include <istream>

#include "sea/errors.hpp"

namespace sea {

namespace {

constexpr std::array<std::string_view, 24> kDefaultDirectives = {
    "db",     "dw",     "dd",   "dq",   "dt",    "align", "proc",  "endp",
    "near",   "far",    "assume", "public", "extrn", "include", "unicode", "offset",
    "byte",   "word",   "dword", "qword", "segment", "ends", "org", "equ"};

// Keywords that follow a name being defined, as in "aHello db 'x',0" or
// "start proc near". Operand keywords such as "offset" or "dword" are not here.
constexpr std::array<std::string_view, 12> kDefiningKeywords = {
    "db", "dw", "dd", "dq", "dt", "proc", "endp", "segment", "ends", "equ", "struc", "label"};

bool is_defining_keyword(std::string_view lowercase_token) {
  for (auto k : kDefiningKeywords) {
    if (k == lowercase_token) return true;
  }
  return false;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// IDA prints opcode bytes as two uppercase hex digits, a trailing '+' marks
// a truncated byte column.
bool is_byte_column(std::string_view tok) {
  if (tok.size() == 3 && tok[2] == '+') tok = tok.substr(0, 2);
  if (tok.size() != 2) return false;
  for (char c : tok) {
    if (!(is_digit(c) || (c >= 'A' && c <= 'F'))) return false;
  }
  return true;
}

// Letters optionally followed by digits: "push", "cvttsd2si" does not qualify
// but "movsd", "int3" and "fld" do.
bool is_mnemonic_shape(std::string_view tok) {
  std::size_t i = 0;
  while (i < tok.size() && is_alpha(tok[i])) ++i;
  if (i == 0) return false;
  while (i < tok.size() && is_digit(tok[i])) ++i;
  return i == tok.size();
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

DirectiveSet::DirectiveSet() : tokens_(kDefaultDirectives.begin(), kDefaultDirectives.end()) {}

DirectiveSet::DirectiveSet(std::set<std::string, std::less<>> tokens) : tokens_(std::move(tokens)) {}

DirectiveSet DirectiveSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ReadError("cannot open directive list " + path.string(), 0);
  std::set<std::string, std::less<>> tokens;
  std::string line;
  while (std::getline(in, line)) {
    auto parts = split_ws(line);
    if (parts.empty() || parts.front().front() == '#') continue;
    tokens.insert(lowercase(parts.front()));
  }
  return DirectiveSet(std::move(tokens));
}

bool DirectiveSet::contains(std::string_view lowercase_token) const {
  return tokens_.find(lowercase_token) != tokens_.end();
}

bool is_directive(std::string_view lowercase_token) {
  static const DirectiveSet defaults;
  return defaults.contains(lowercase_token);
}

std::optional<ParsedLine> parse_asm_line(std::string_view line) {
  static const DirectiveSet defaults;
  return parse_asm_line(line, defaults);
}

std::optional<ParsedLine> parse_asm_line(std::string_view line, const DirectiveSet& directives) {
  // <section>:<hexaddress> prefix, no leading whitespace.
  const std::size_t colon = line.find(':');
  if (colon == 0 || colon == std::string_view::npos) return std::nullopt;
  const std::string_view section = line.substr(0, colon);
  for (char c : section) {
    if (is_space(c) || c == ';') return std::nullopt;
  }
  std::size_t pos = colon + 1;
  std::uint64_t address = 0;
  std::size_t digits = 0;
  while (pos < line.size() && !is_space(line[pos])) {
    const int h = hex_value(line[pos]);
    if (h < 0 || digits == 16) return std::nullopt;
    address = (address << 4) | static_cast<std::uint64_t>(h);
    ++digits;
    ++pos;
  }
  if (digits == 0) return std::nullopt;

  ParsedLine parsed;
  parsed.section = std::string(section);
  parsed.address = address;

  std::string_view rest = line.substr(pos);
  if (const std::size_t semi = rest.find(';'); semi != std::string_view::npos) {
    rest = rest.substr(0, semi);
  }
  const auto tokens = split_ws(rest);
  std::size_t i = 0;
  while (i < tokens.size() && is_byte_column(tokens[i])) ++i;
  if (i == tokens.size()) return parsed;

  const std::string_view candidate = tokens[i];
  if (!is_mnemonic_shape(candidate)) return parsed;
  std::string mnemonic = lowercase(candidate);
  if (directives.contains(mnemonic)) return parsed;
  if (i + 1 < tokens.size() && is_defining_keyword(lowercase(tokens[i + 1]))) return parsed;

  parsed.mnemonic = std::move(mnemonic);
  return parsed;
}

OpcodeSequence extract_opcodes(std::istream& in, std::string sample_id,
                               const DirectiveSet& directives) {
  OpcodeSequence seq;
  seq.sample_id = std::move(sample_id);
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    offset += line.size() + 1;
    if (auto parsed = parse_asm_line(line, directives); parsed && parsed->mnemonic) {
      seq.tokens.push_back(std::move(*parsed->mnemonic));
    }
  }
  if (in.bad()) throw ReadError("read failure in " + seq.sample_id, offset);
  return seq;
}

OpcodeSequence extract_opcodes_file(const std::filesystem::path& path,
                                    const DirectiveSet& directives) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReadError("cannot open " + path.string(), 0);
  return extract_opcodes(in, path.stem().string(), directives);
}

void write_opcodes_file(const std::filesystem::path& path, const OpcodeSequence& seq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReadError("cannot write " + path.string(), 0);
  for (const auto& t : seq.tokens) out << t << '\n';
  if (!out) throw ReadError("write failure in " + path.string(), 0);
}

OpcodeSequence read_opcodes_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReadError("cannot open " + path.string(), 0);
  OpcodeSequence seq;
  seq.sample_id = path.stem().string();
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) seq.tokens.push_back(std::move(line));
  }
  if (in.bad()) throw ReadError("read failure in " + path.string(), offset);
  return seq;
}

}  // namespace sea
