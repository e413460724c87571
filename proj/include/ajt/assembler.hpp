#pragma once

// Two-pass assembler and disassembler for AJT-lite.
//
// Syntax summary:
//   label:  mnemonic operands   # comment   (';' also starts a comment)
//   registers r0..r31 (aliases zero, sp=r29, ra=r31), f0..f15
//   memory operands  imm(rN)
//   branch / jal targets: a label, or a bare integer word offset
//   directives: .org ADDR  .align N  .word V[, V...]  .double D[, D...]
//               .space N   .global LABEL
//   pseudo-instructions: li, la, mv, j, call, ret
//   %hi(sym) / %lo(sym) are accepted where a 16-bit logical immediate is.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ajt/isa.hpp"

namespace ajt::assembler {

enum class AsmErrorKind {
  UnknownMnemonic,
  DuplicateLabel,
  UndefinedLabel,
  OperandCount,
  ImmediateRange,
  BadDirective,
  BadOperand,
};

std::string_view kind_name(AsmErrorKind k);

struct AsmError {
  int line = 0;  // 1-based
  AsmErrorKind kind = AsmErrorKind::BadOperand;
  std::string message;
};

std::string format_error(const AsmError& e);

struct AsmResult {
  std::optional<isa::Program> program;
  std::vector<AsmError> errors;

  bool ok() const { return program.has_value(); }
};

AsmResult assemble(std::string_view source);

class AsmFailure : public std::runtime_error {
 public:
  explicit AsmFailure(std::vector<AsmError> errors);
  const std::vector<AsmError>& errors() const { return errors_; }

 private:
  std::vector<AsmError> errors_;
};

/// Assembles or throws AsmFailure carrying every diagnostic.
isa::Program assemble_or_throw(std::string_view source);

/// Text for one word; words that do not decode come out as `.word 0x...`.
std::string disassemble_word(std::uint32_t word);
std::string format_instruction(const isa::Instruction& in);

/// Re-assemblable listing. Emits `.org` only when the base is non-zero.
std::string disassemble(const isa::Program& p);

}  // namespace ajt::assembler
