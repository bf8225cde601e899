// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sea {

// One addressed line of an IDA-style listing, e.g.
//   .text:00401000 56                      push    esi
struct ParsedLine {
  std::string section;
  std::uint64_t address = 0;
  std::optional<std::string> mnemonic;
};

// Ordered opcode mnemonics of one sample. label is 1-based (1..9) when known.
struct OpcodeSequence {
  std::string sample_id;
  std::vector<std::string> tokens;
  std::optional<int> label;
};

// Assembler directives and data-definition keywords that never count as opcodes.
class DirectiveSet {
 public:
  DirectiveSet();  // built-in list
  explicit DirectiveSet(std::set<std::string, std::less<>> tokens);
  // One token per line; blank lines and lines starting with '#' are ignored.
  static DirectiveSet load(const std::filesystem::path& path);

  bool contains(std::string_view lowercase_token) const;
  const std::set<std::string, std::less<>>& tokens() const noexcept { return tokens_; }

 private:
  std::set<std::string, std::less<>> tokens_;
};

bool is_directive(std::string_view lowercase_token);

std::optional<ParsedLine> parse_asm_line(std::string_view line);
std::optional<ParsedLine> parse_asm_line(std::string_view line, const DirectiveSet& directives);

// Streams lines in file order; only the token list grows with input size.
// Throws ReadError when the stream fails mid-read.
OpcodeSequence extract_opcodes(std::istream& in, std::string sample_id,
                               const DirectiveSet& directives = DirectiveSet());
OpcodeSequence extract_opcodes_file(const std::filesystem::path& path,
                                    const DirectiveSet& directives = DirectiveSet());

// `.opcodes` files: one mnemonic per line, '\n' terminated.
void write_opcodes_file(const std::filesystem::path& path, const OpcodeSequence& seq);
OpcodeSequence read_opcodes_file(const std::filesystem::path& path);

}  // namespace sea
