#include <doctest.h>

#include <random>

#include "ajt/isa.hpp"

using namespace ajt::isa;

namespace {

// Random legal operands for `op`, driven by its format.
Instruction random_legal(Opcode op, std::mt19937_64& rng) {
  auto ireg = [&] { return static_cast<int>(rng() % 32); };
  auto freg = [&] { return static_cast<int>(rng() % 16); };
  auto imm16 = [&] { return static_cast<std::int32_t>(rng() % 65536) - 32768; };
  Instruction in;
  in.op = op;
  switch (info(op).format) {
    case Format::R: in = make_r(op, ireg(), ireg(), ireg()); break;
    case Format::I:
    case Format::Mem:
    case Format::Jr: in = make_i(op, ireg(), ireg(), imm16()); break;
    case Format::U: in.rd = static_cast<std::uint8_t>(ireg()); in.imm = imm16(); break;
    case Format::Store: in = make_store(op, ireg(), ireg(), imm16()); break;
    case Format::B: in = make_branch(op, ireg(), ireg(), imm16()); break;
    case Format::J: in = make_jal(static_cast<std::int32_t>(rng() % (1u << 26)) - (1 << 25)); break;
    case Format::FR:
      in.rd = static_cast<std::uint8_t>(freg());
      in.rs1 = static_cast<std::uint8_t>(freg());
      in.rs2 = static_cast<std::uint8_t>(freg());
      break;
    case Format::FLong:
      in.rd = static_cast<std::uint8_t>(freg());
      in.rs1 = static_cast<std::uint8_t>(freg());
      in.rs2 = op == Opcode::Fsqrt ? 0 : static_cast<std::uint8_t>(freg());
      in.mode = static_cast<std::uint8_t>(rng() % 2);
      break;
    case Format::FCvt:
      in.mode = static_cast<std::uint8_t>(rng() % 3);
      in.rd = static_cast<std::uint8_t>(in.mode == 2 ? ireg() : freg());
      in.rs1 = static_cast<std::uint8_t>(in.mode == 1 ? ireg() : freg());
      break;
    case Format::FMem:
      in.rd = static_cast<std::uint8_t>(freg());
      in.rs1 = static_cast<std::uint8_t>(ireg());
      in.imm = imm16();
      break;
    case Format::FStore:
      in.rs1 = static_cast<std::uint8_t>(ireg());
      in.rs2 = static_cast<std::uint8_t>(freg());
      in.imm = imm16();
      break;
    case Format::Rd: in = make_sys(op, ireg()); break;
    case Format::None: in = make_sys(op); break;
  }
  return in;
}

}  // namespace

TEST_SUITE("isa") {

TEST_CASE("nop encodes with every field zero") {
  auto w = encode(make_sys(Opcode::Nop));
  CHECK(w == static_cast<std::uint32_t>(Opcode::Nop) << 26);
  CHECK(decode(w).op == Opcode::Nop);
}

TEST_CASE("addi round trip") {
  auto in = make_i(Opcode::Addi, 1, 0, 5);
  auto w = encode(in);
  CHECK(decode(w) == in);
  CHECK((w & 0xFFFF) == 5);
}

TEST_CASE("halt round trip and the reserved zero word") {
  CHECK(decode(encode(make_sys(Opcode::Halt))).op == Opcode::Halt);
  CHECK(decode(kIllegalWord).op == Opcode::Illegal);
}

TEST_CASE("immediate out of range is rejected") {
  CHECK_THROWS_AS(encode(make_i(Opcode::Addi, 1, 0, 40000)), EncodingRange);
  CHECK_THROWS_AS(encode(make_i(Opcode::Addi, 1, 0, -32769)), EncodingRange);
  CHECK_THROWS_AS(encode(make_jal(1 << 25)), EncodingRange);
  CHECK_NOTHROW(encode(make_jal(-(1 << 25))));
}

TEST_CASE("every opcode belongs to one class") {
  for (int i = 1; i < kNumOpcodes; ++i) {
    auto op = static_cast<Opcode>(i);
    CHECK(op_class(op) != OpClass::Illegal);
    CHECK(opcode_from_mnemonic(mnemonic(op)) == op);
  }
  CHECK(op_class(Opcode::Mul) == OpClass::IntAlu);
  CHECK(op_class(Opcode::Rem) == OpClass::IntDiv);
  CHECK(op_class(Opcode::Tas) == OpClass::Atomic);
  CHECK(op_class(Opcode::Fcvt) == OpClass::FpShort);
  CHECK(op_class(Opcode::Fsqrt) == OpClass::FpLong);
  CHECK(op_class(Opcode::Fst) == OpClass::FpMem);
}

TEST_CASE("opcode sweep: decode inverts encode") {
  std::mt19937_64 rng(7);
  for (int i = 1; i < kNumOpcodes; ++i) {
    auto op = static_cast<Opcode>(i);
    for (int k = 0; k < 2000; ++k) {
      auto in = random_legal(op, rng);
      REQUIRE(is_well_formed(in));
      auto w = encode(in);
      INFO(mnemonic(op), " word ", w);
      REQUIRE(decode(w) == in);
    }
  }
}

TEST_CASE("decode is total and exact on what it accepts") {
  std::mt19937_64 rng(11);
  int legal = 0;
  for (int k = 0; k < 200000; ++k) {
    auto w = static_cast<std::uint32_t>(rng());
    auto in = decode(w);
    if (in.op == Opcode::Illegal) continue;
    ++legal;
    REQUIRE(is_well_formed(in));
    REQUIRE(encode(in) == w);
  }
  CHECK(legal > 0);
}

TEST_CASE("program entry and validation") {
  Program p;
  p.base_address = 0x100;
  p.words = {encode(make_sys(Opcode::Nop)), encode(make_sys(Opcode::Halt))};
  CHECK(p.entry() == 0x100);
  p.entry_points["main"] = 0x104;
  CHECK(p.entry() == 0x104);
  CHECK_NOTHROW(validate(p));
  p.entry_points["bad"] = 0x108;
  CHECK_THROWS(validate(p));
  p.entry_points.erase("bad");
  p.base_address = 0x102;
  CHECK_THROWS(validate(p));
}

TEST_CASE("image bytes round trip") {
  Program p;
  p.base_address = 0x2000;
  p.words = {1, 2, 0xDEADBEEF};
  auto bytes = to_image_bytes(p);
  REQUIRE(bytes.size() == 8 + 12);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "AJTL");
  auto q = from_image_bytes(bytes);
  CHECK(q.base_address == p.base_address);
  CHECK(q.words == p.words);
  bytes[0] = 'X';
  CHECK_THROWS(from_image_bytes(bytes));
}

}
