#pragma once

// AJT-lite: a fixed-width 32-bit RISC-style instruction set used by the
// dual-thread core model.
//
// Word layout (bit 31 is the MSB):
//
//   [31:26] opcode   (0 is reserved and always decodes to Illegal)
//   [25:21] A slot   rd / fd, or the stored value register for stores,
//                    or the first compared register for branches
//   [20:16] B slot   rs1 / fs1 (base register for memory forms)
//   [15:11] C slot   rs2 / fs2 for register-register forms
//   [10:9]  FCVT conversion mode, [10] FDIV/FSQRT single-precision flag
//   [15:0]  imm16 for immediate, memory and branch forms
//   [25:0]  signed word offset for JAL
//
// Fields that a format does not use must be zero; anything else decodes to
// Illegal, which keeps decode an exact inverse of encode on legal words.

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ajt::isa {

enum class Opcode : std::uint8_t {
  Illegal = 0,
  // integer ALU
  Add, Sub, And, Or, Xor, Sll, Srl, Sra, Slt, Mul,
  Addi, Andi, Ori, Xori, Slti, Lui,
  // integer divider
  Div, Rem,
  // memory
  Lw, Lb, Sw, Sb,
  // control
  Beq, Bne, Blt, Bge,
  Jal, Jalr,
  // atomic test-and-set (byte)
  Tas,
  // floating point
  Fadd, Fsub, Fmul, Fcvt,
  Fdiv, Fsqrt,
  Fld, Fst,
  // system
  Tid, Nop, Halt,
  Count_
};

inline constexpr int kNumOpcodes = static_cast<int>(Opcode::Count_);

enum class OpClass : std::uint8_t {
  IntAlu, IntDiv, Load, Store, Branch, Jump, Atomic,
  FpShort, FpLong, FpMem, Sys, Illegal
};

enum class Format : std::uint8_t {
  R,      // rd, rs1, rs2
  I,      // rd, rs1, imm
  U,      // rd, imm (lui)
  Mem,    // rd, imm(rs1)       lw/lb/tas
  Store,  // rs2, imm(rs1)      sw/sb
  B,      // rs1, rs2, offset
  J,      // offset             jal
  Jr,     // rd, rs1, imm       jalr
  FR,     // fd, fs1, fs2
  FLong,  // fd, fs1[, fs2] + precision flag
  FCvt,   // conversion, mode selects register files
  FMem,   // fd, imm(rs1)       fld
  FStore, // fs, imm(rs1)       fst
  Rd,     // rd                 tid
  None,   // nop/halt
};

/// FCVT conversion modes.
enum class CvtMode : std::uint8_t {
  RoundSingle = 0, // fd <- (double)(float)fs1
  IntToDouble = 1, // fd <- (double)(int32)rs1
  DoubleToInt = 2, // rd <- trunc(fs1)
};

inline constexpr int kNumIntRegs = 32;
inline constexpr int kNumFpRegs = 16;
inline constexpr int kLinkReg = 31;
inline constexpr std::uint32_t kIllegalWord = 0x00000000u;

/// Decoded instruction. Register slots are shared between integer and FP
/// forms; for FP formats the values index the 16-entry FP register file.
struct Instruction {
  Opcode op = Opcode::Illegal;
  std::uint8_t rd = 0;   // also fd
  std::uint8_t rs1 = 0;  // also fs1
  std::uint8_t rs2 = 0;  // also fs2, and the stored value register for SW/SB/FST
  std::int32_t imm = 0;  // sign-extended imm16, or the JAL word offset
  std::uint8_t mode = 0; // FCVT mode, or 1 for single-precision FDIV/FSQRT

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct OpcodeInfo {
  std::string_view mnemonic;
  OpClass cls;
  Format format;
};

const OpcodeInfo& info(Opcode op);
OpClass op_class(Opcode op);
std::string_view mnemonic(Opcode op);
std::string_view class_name(OpClass c);

/// Looks up a base mnemonic ("fdiv" for both precisions). Returns Illegal when unknown.
Opcode opcode_from_mnemonic(std::string_view m);

class EncodingRange : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Encodes a legal instruction. Throws EncodingRange when a field does not fit.
std::uint32_t encode(const Instruction& instr);

/// Total decode; unknown or malformed words produce an Illegal instruction.
Instruction decode(std::uint32_t word);

/// True if `instr` satisfies the register-range and field invariants.
bool is_well_formed(const Instruction& instr);

// Convenience constructors used by tests and generators.
Instruction make_r(Opcode op, int rd, int rs1, int rs2);
Instruction make_i(Opcode op, int rd, int rs1, std::int32_t imm);
Instruction make_store(Opcode op, int value_reg, int base, std::int32_t imm);
Instruction make_branch(Opcode op, int rs1, int rs2, std::int32_t offset);
Instruction make_jal(std::int32_t offset);
Instruction make_sys(Opcode op, int rd = 0);

// ---------------------------------------------------------------------------
// Program images

struct Program {
  std::uint32_t base_address = 0;
  std::vector<std::uint32_t> words;
  std::map<std::string, std::uint32_t, std::less<>> entry_points; // .global labels
  std::map<std::string, std::uint32_t, std::less<>> symbols;      // every label

  std::uint32_t end_address() const {
    return base_address + static_cast<std::uint32_t>(words.size()) * 4u;
  }
  bool contains(std::uint32_t addr) const { return addr >= base_address && addr < end_address(); }
  /// Address of `label`; throws std::out_of_range if missing.
  std::uint32_t symbol(std::string_view label) const;
  /// `_start` if defined, else the lowest .global label, else the base address.
  std::uint32_t entry() const;
};

/// Checks base alignment and that entry points fall inside the image.
void validate(const Program& p);

inline constexpr char kImageMagic[4] = {'A', 'J', 'T', 'L'};

/// Binary image: "AJTL", little-endian base address, then little-endian words.
std::vector<std::uint8_t> to_image_bytes(const Program& p);
Program from_image_bytes(std::span<const std::uint8_t> bytes);

void write_image_file(const std::string& path, const Program& p);
Program read_image_file(const std::string& path);

}  // namespace ajt::isa
