#include "ajt/isa.hpp"

#include <array>
#include <fstream>
#include <iterator>

namespace ajt::isa {

namespace {

constexpr std::array<OpcodeInfo, kNumOpcodes> kInfo = {{
    {"illegal", OpClass::Illegal, Format::None},
    {"add", OpClass::IntAlu, Format::R},
    {"sub", OpClass::IntAlu, Format::R},
    {"and", OpClass::IntAlu, Format::R},
    {"or", OpClass::IntAlu, Format::R},
    {"xor", OpClass::IntAlu, Format::R},
    {"sll", OpClass::IntAlu, Format::R},
    {"srl", OpClass::IntAlu, Format::R},
    {"sra", OpClass::IntAlu, Format::R},
    {"slt", OpClass::IntAlu, Format::R},
    {"mul", OpClass::IntAlu, Format::R},
    {"addi", OpClass::IntAlu, Format::I},
    {"andi", OpClass::IntAlu, Format::I},
    {"ori", OpClass::IntAlu, Format::I},
    {"xori", OpClass::IntAlu, Format::I},
    {"slti", OpClass::IntAlu, Format::I},
    {"lui", OpClass::IntAlu, Format::U},
    {"div", OpClass::IntDiv, Format::R},
    {"rem", OpClass::IntDiv, Format::R},
    {"lw", OpClass::Load, Format::Mem},
    {"lb", OpClass::Load, Format::Mem},
    {"sw", OpClass::Store, Format::Store},
    {"sb", OpClass::Store, Format::Store},
    {"beq", OpClass::Branch, Format::B},
    {"bne", OpClass::Branch, Format::B},
    {"blt", OpClass::Branch, Format::B},
    {"bge", OpClass::Branch, Format::B},
    {"jal", OpClass::Jump, Format::J},
    {"jalr", OpClass::Jump, Format::Jr},
    {"tas", OpClass::Atomic, Format::Mem},
    {"fadd", OpClass::FpShort, Format::FR},
    {"fsub", OpClass::FpShort, Format::FR},
    {"fmul", OpClass::FpShort, Format::FR},
    {"fcvt", OpClass::FpShort, Format::FCvt},
    {"fdiv", OpClass::FpLong, Format::FLong},
    {"fsqrt", OpClass::FpLong, Format::FLong},
    {"fld", OpClass::FpMem, Format::FMem},
    {"fst", OpClass::FpMem, Format::FStore},
    {"tid", OpClass::Sys, Format::Rd},
    {"nop", OpClass::Sys, Format::None},
    {"halt", OpClass::Sys, Format::None},
}};

constexpr std::uint32_t field(std::uint32_t w, int lo, int bits) {
  return (w >> lo) & ((1u << bits) - 1u);
}

bool fits_imm16(std::int32_t v) { return v >= -32768 && v <= 32767; }
bool fits_imm26(std::int32_t v) { return v >= -(1 << 25) && v < (1 << 25); }

bool int_reg(int r) { return r >= 0 && r < kNumIntRegs; }
bool fp_reg(int r) { return r >= 0 && r < kNumFpRegs; }

std::uint32_t pack(Opcode op, std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t low11) {
  return (static_cast<std::uint32_t>(op) << 26) | (a << 21) | (b << 16) | (c << 11) | low11;
}

std::uint32_t pack_imm(Opcode op, std::uint32_t a, std::uint32_t b, std::int32_t imm) {
  return (static_cast<std::uint32_t>(op) << 26) | (a << 21) | (b << 16) |
         (static_cast<std::uint32_t>(imm) & 0xFFFFu);
}

}  // namespace

const OpcodeInfo& info(Opcode op) {
  auto i = static_cast<std::size_t>(op);
  return i < kInfo.size() ? kInfo[i] : kInfo[0];
}

OpClass op_class(Opcode op) { return info(op).cls; }
std::string_view mnemonic(Opcode op) { return info(op).mnemonic; }

std::string_view class_name(OpClass c) {
  switch (c) {
    case OpClass::IntAlu: return "INT_ALU";
    case OpClass::IntDiv: return "INT_DIV";
    case OpClass::Load: return "LOAD";
    case OpClass::Store: return "STORE";
    case OpClass::Branch: return "BRANCH";
    case OpClass::Jump: return "JUMP";
    case OpClass::Atomic: return "ATOMIC";
    case OpClass::FpShort: return "FP_SHORT";
    case OpClass::FpLong: return "FP_LONG";
    case OpClass::FpMem: return "FP_MEM";
    case OpClass::Sys: return "SYS";
    case OpClass::Illegal: return "ILLEGAL";
  }
  return "ILLEGAL";
}

Opcode opcode_from_mnemonic(std::string_view m) {
  for (int i = 1; i < kNumOpcodes; ++i) {
    if (kInfo[static_cast<std::size_t>(i)].mnemonic == m) return static_cast<Opcode>(i);
  }
  return Opcode::Illegal;
}

bool is_well_formed(const Instruction& in) {
  if (in.op == Opcode::Illegal || static_cast<int>(in.op) >= kNumOpcodes) return false;
  switch (info(in.op).format) {
    case Format::R:
      return int_reg(in.rd) && int_reg(in.rs1) && int_reg(in.rs2) && in.imm == 0 && in.mode == 0;
    case Format::I:
    case Format::Mem:
    case Format::Jr:
      return int_reg(in.rd) && int_reg(in.rs1) && in.rs2 == 0 && fits_imm16(in.imm) && in.mode == 0;
    case Format::U:
      return int_reg(in.rd) && in.rs1 == 0 && in.rs2 == 0 && fits_imm16(in.imm) && in.mode == 0;
    case Format::Store:
      return in.rd == 0 && int_reg(in.rs1) && int_reg(in.rs2) && fits_imm16(in.imm) && in.mode == 0;
    case Format::B:
      return in.rd == 0 && int_reg(in.rs1) && int_reg(in.rs2) && fits_imm16(in.imm) && in.mode == 0;
    case Format::J:
      return in.rd == 0 && in.rs1 == 0 && in.rs2 == 0 && fits_imm26(in.imm) && in.mode == 0;
    case Format::FR:
      return fp_reg(in.rd) && fp_reg(in.rs1) && fp_reg(in.rs2) && in.imm == 0 && in.mode == 0;
    case Format::FLong:
      return fp_reg(in.rd) && fp_reg(in.rs1) && fp_reg(in.rs2) && in.imm == 0 && in.mode <= 1 &&
             (in.op != Opcode::Fsqrt || in.rs2 == 0);
    case Format::FCvt:
      if (in.rs2 != 0 || in.imm != 0) return false;
      switch (static_cast<CvtMode>(in.mode)) {
        case CvtMode::RoundSingle: return fp_reg(in.rd) && fp_reg(in.rs1);
        case CvtMode::IntToDouble: return fp_reg(in.rd) && int_reg(in.rs1);
        case CvtMode::DoubleToInt: return int_reg(in.rd) && fp_reg(in.rs1);
      }
      return false;
    case Format::FMem:
      return fp_reg(in.rd) && int_reg(in.rs1) && in.rs2 == 0 && fits_imm16(in.imm) && in.mode == 0;
    case Format::FStore:
      return in.rd == 0 && int_reg(in.rs1) && fp_reg(in.rs2) && fits_imm16(in.imm) && in.mode == 0;
    case Format::Rd:
      return int_reg(in.rd) && in.rs1 == 0 && in.rs2 == 0 && in.imm == 0 && in.mode == 0;
    case Format::None:
      return in.rd == 0 && in.rs1 == 0 && in.rs2 == 0 && in.imm == 0 && in.mode == 0;
  }
  return false;
}

std::uint32_t encode(const Instruction& in) {
  const auto fmt = info(in.op).format;
  if (in.op == Opcode::Illegal) throw EncodingRange("cannot encode an illegal instruction");
  if (fmt == Format::J ? !fits_imm26(in.imm) : !fits_imm16(in.imm)) {
    throw EncodingRange(std::string(mnemonic(in.op)) + ": immediate " + std::to_string(in.imm) +
                        " out of range");
  }
  if (!is_well_formed(in)) {
    throw EncodingRange(std::string(mnemonic(in.op)) + ": operand fields out of range");
  }
  switch (fmt) {
    case Format::R:
    case Format::FR:
      return pack(in.op, in.rd, in.rs1, in.rs2, 0);
    case Format::FLong:
      return pack(in.op, in.rd, in.rs1, in.rs2, static_cast<std::uint32_t>(in.mode) << 10);
    case Format::FCvt:
      return pack(in.op, in.rd, in.rs1, 0, static_cast<std::uint32_t>(in.mode) << 9);
    case Format::I:
    case Format::U:
    case Format::Mem:
    case Format::Jr:
    case Format::FMem:
      return pack_imm(in.op, in.rd, in.rs1, in.imm);
    case Format::Store:
    case Format::FStore:
      return pack_imm(in.op, in.rs2, in.rs1, in.imm);
    case Format::B:
      return pack_imm(in.op, in.rs1, in.rs2, in.imm);
    case Format::J:
      return (static_cast<std::uint32_t>(in.op) << 26) | (static_cast<std::uint32_t>(in.imm) & 0x03FFFFFFu);
    case Format::Rd:
      return pack(in.op, in.rd, 0, 0, 0);
    case Format::None:
      return pack(in.op, 0, 0, 0, 0);
  }
  throw EncodingRange("unknown format");
}

Instruction decode(std::uint32_t w) {
  Instruction in;
  const auto opbits = field(w, 26, 6);
  if (opbits == 0 || opbits >= static_cast<std::uint32_t>(kNumOpcodes)) return Instruction{};
  in.op = static_cast<Opcode>(opbits);
  const auto a = static_cast<std::uint8_t>(field(w, 21, 5));
  const auto b = static_cast<std::uint8_t>(field(w, 16, 5));
  const auto c = static_cast<std::uint8_t>(field(w, 11, 5));
  const auto low11 = field(w, 0, 11);
  const auto imm16 = static_cast<std::int32_t>(static_cast<std::int16_t>(w & 0xFFFFu));

  switch (info(in.op).format) {
    case Format::R:
    case Format::FR:
      if (low11 != 0) return Instruction{};
      in.rd = a; in.rs1 = b; in.rs2 = c;
      break;
    case Format::FLong:
      if ((low11 & 0x3FFu) != 0) return Instruction{};
      in.rd = a; in.rs1 = b; in.rs2 = c; in.mode = static_cast<std::uint8_t>(low11 >> 10);
      break;
    case Format::FCvt:
      if (c != 0 || (low11 & 0x1FFu) != 0) return Instruction{};
      in.rd = a; in.rs1 = b; in.mode = static_cast<std::uint8_t>(low11 >> 9);
      break;
    case Format::I:
    case Format::U:
    case Format::Mem:
    case Format::Jr:
    case Format::FMem:
      in.rd = a; in.rs1 = b; in.imm = imm16;
      break;
    case Format::Store:
    case Format::FStore:
      in.rs2 = a; in.rs1 = b; in.imm = imm16;
      break;
    case Format::B:
      in.rs1 = a; in.rs2 = b; in.imm = imm16;
      break;
    case Format::J: {
      auto raw = w & 0x03FFFFFFu;
      in.imm = static_cast<std::int32_t>(raw << 6) >> 6;
      break;
    }
    case Format::Rd:
      if ((w & 0x001FFFFFu) != 0) return Instruction{};
      in.rd = a;
      break;
    case Format::None:
      if ((w & 0x03FFFFFFu) != 0) return Instruction{};
      break;
  }
  return is_well_formed(in) ? in : Instruction{};
}

Instruction make_r(Opcode op, int rd, int rs1, int rs2) {
  return Instruction{op, static_cast<std::uint8_t>(rd), static_cast<std::uint8_t>(rs1),
                     static_cast<std::uint8_t>(rs2), 0, 0};
}

Instruction make_i(Opcode op, int rd, int rs1, std::int32_t imm) {
  return Instruction{op, static_cast<std::uint8_t>(rd), static_cast<std::uint8_t>(rs1), 0, imm, 0};
}

Instruction make_store(Opcode op, int value_reg, int base, std::int32_t imm) {
  return Instruction{op, 0, static_cast<std::uint8_t>(base), static_cast<std::uint8_t>(value_reg), imm, 0};
}

Instruction make_branch(Opcode op, int rs1, int rs2, std::int32_t offset) {
  return Instruction{op, 0, static_cast<std::uint8_t>(rs1), static_cast<std::uint8_t>(rs2), offset, 0};
}

Instruction make_jal(std::int32_t offset) { return Instruction{Opcode::Jal, 0, 0, 0, offset, 0}; }

Instruction make_sys(Opcode op, int rd) {
  return Instruction{op, static_cast<std::uint8_t>(rd), 0, 0, 0, 0};
}

// ---------------------------------------------------------------------------

std::uint32_t Program::symbol(std::string_view label) const {
  auto it = symbols.find(label);
  if (it == symbols.end()) throw std::out_of_range("unknown symbol: " + std::string(label));
  return it->second;
}

std::uint32_t Program::entry() const {
  if (auto it = symbols.find("_start"); it != symbols.end()) return it->second;
  std::uint32_t best = base_address;
  bool found = false;
  for (const auto& [name, addr] : entry_points) {
    if (!found || addr < best) best = addr;
    found = true;
  }
  return best;
}

void validate(const Program& p) {
  if (p.base_address % 4 != 0) throw std::invalid_argument("program base address is not word aligned");
  for (const auto& [name, addr] : p.entry_points) {
    if (!p.contains(addr)) throw std::invalid_argument("entry point outside image: " + name);
  }
}

std::vector<std::uint8_t> to_image_bytes(const Program& p) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + p.words.size() * 4);
  out.insert(out.end(), std::begin(kImageMagic), std::end(kImageMagic));
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put32(p.base_address);
  for (auto w : p.words) put32(w);
  return out;
}

Program from_image_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || !std::equal(std::begin(kImageMagic), std::end(kImageMagic), bytes.begin())) {
    throw std::runtime_error("not an AJTL image (bad magic)");
  }
  if ((bytes.size() - 8) % 4 != 0) throw std::runtime_error("AJTL image payload is not a whole number of words");
  auto get32 = [&](std::size_t off) {
    return static_cast<std::uint32_t>(bytes[off]) | (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[off + 2]) << 16) | (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
  };
  Program p;
  p.base_address = get32(4);
  if (p.base_address % 4 != 0) throw std::runtime_error("AJTL image base address is not word aligned");
  for (std::size_t off = 8; off < bytes.size(); off += 4) p.words.push_back(get32(off));
  return p;
}

void write_image_file(const std::string& path, const Program& p) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  auto bytes = to_image_bytes(p);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

Program read_image_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open image: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_image_bytes(bytes);
}

}  // namespace ajt::isa
