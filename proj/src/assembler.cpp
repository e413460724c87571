#include "ajt/assembler.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <map>
#include <set>
#include <variant>

namespace ajt::assembler {

using isa::Format;
using isa::Instruction;
using isa::Opcode;

std::string_view kind_name(AsmErrorKind k) {
  switch (k) {
    case AsmErrorKind::UnknownMnemonic: return "UnknownMnemonic";
    case AsmErrorKind::DuplicateLabel: return "DuplicateLabel";
    case AsmErrorKind::UndefinedLabel: return "UndefinedLabel";
    case AsmErrorKind::OperandCount: return "OperandCount";
    case AsmErrorKind::ImmediateRange: return "ImmediateRange";
    case AsmErrorKind::BadDirective: return "BadDirective";
    case AsmErrorKind::BadOperand: return "BadOperand";
  }
  return "?";
}

std::string format_error(const AsmError& e) {
  return fmt::format("line {}: {}: {}", e.line, kind_name(e.kind), e.message);
}

namespace {

std::string join_errors(const std::vector<AsmError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += '\n';
    out += format_error(e);
  }
  return out;
}

}  // namespace

AsmFailure::AsmFailure(std::vector<AsmError> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

namespace {

struct ParseError {
  AsmErrorKind kind;
  std::string message;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

bool is_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s[0])) return false;
  return std::all_of(s.begin(), s.end(), is_ident_char);
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) return std::nullopt;
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  if (v > (1ull << 33)) return std::nullopt;
  auto sv = static_cast<std::int64_t>(v);
  return neg ? -sv : sv;
}

std::optional<double> parse_double(std::string_view s) {
  std::string tmp(trim(s));
  if (tmp.empty()) return std::nullopt;
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

std::optional<int> parse_reg(std::string_view s, char prefix, int count) {
  s = trim(s);
  if (prefix == 'r') {
    if (s == "zero") return 0;
    if (s == "sp") return 29;
    if (s == "ra") return 31;
  }
  if (s.size() < 2 || s[0] != prefix) return std::nullopt;
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data() + 1, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0 || v >= count) return std::nullopt;
  return v;
}

// A symbolic expression: label, label+N, label-N, %hi(...), %lo(...), or a number.
struct Expr {
  enum class Part { Full, Hi, Lo } part = Part::Full;
  std::string label;  // empty for plain numbers
  std::int64_t offset = 0;
};

std::optional<Expr> parse_expr(std::string_view s) {
  s = trim(s);
  Expr e;
  auto strip_fn = [&](std::string_view name, Expr::Part part) {
    if (s.substr(0, name.size()) == name && s.back() == ')') {
      e.part = part;
      s = trim(s.substr(name.size(), s.size() - name.size() - 1));
      return true;
    }
    return false;
  };
  if (!strip_fn("%hi(", Expr::Part::Hi)) strip_fn("%lo(", Expr::Part::Lo);
  if (auto n = parse_int(s)) {
    e.offset = *n;
    return e;
  }
  auto pos = s.find_first_of("+-", 1);
  auto name = trim(s.substr(0, pos));
  if (!is_identifier(name)) return std::nullopt;
  e.label = std::string(name);
  if (pos != std::string_view::npos) {
    auto off = parse_int(s.substr(pos));
    if (!off) return std::nullopt;
    e.offset = *off;
  }
  return e;
}

using SymbolTable = std::map<std::string, std::uint32_t, std::less<>>;

std::variant<std::int64_t, ParseError> eval(const Expr& e, const SymbolTable& syms) {
  std::int64_t v = e.offset;
  if (!e.label.empty()) {
    auto it = syms.find(e.label);
    if (it == syms.end()) return ParseError{AsmErrorKind::UndefinedLabel, "undefined label '" + e.label + "'"};
    v += it->second;
  }
  switch (e.part) {
    case Expr::Part::Full: return v;
    case Expr::Part::Hi: return (static_cast<std::uint32_t>(v) >> 16) & 0xFFFFu;
    case Expr::Part::Lo: return static_cast<std::uint32_t>(v) & 0xFFFFu;
  }
  return v;
}

struct Mnemonic {
  Opcode op = Opcode::Illegal;
  std::uint8_t mode = 0;
};

std::optional<Mnemonic> lookup_mnemonic(std::string_view m) {
  if (m == "fdiv" || m == "fdiv.d") return Mnemonic{Opcode::Fdiv, 0};
  if (m == "fdiv.s") return Mnemonic{Opcode::Fdiv, 1};
  if (m == "fsqrt" || m == "fsqrt.d") return Mnemonic{Opcode::Fsqrt, 0};
  if (m == "fsqrt.s") return Mnemonic{Opcode::Fsqrt, 1};
  if (m == "fcvt.s.d") return Mnemonic{Opcode::Fcvt, static_cast<std::uint8_t>(isa::CvtMode::RoundSingle)};
  if (m == "fcvt.d.w") return Mnemonic{Opcode::Fcvt, static_cast<std::uint8_t>(isa::CvtMode::IntToDouble)};
  if (m == "fcvt.w.d") return Mnemonic{Opcode::Fcvt, static_cast<std::uint8_t>(isa::CvtMode::DoubleToInt)};
  if (m == "fcvt") return std::nullopt;
  auto op = isa::opcode_from_mnemonic(m);
  if (op == Opcode::Illegal) return std::nullopt;
  return Mnemonic{op, 0};
}

bool is_logical_imm(Opcode op) { return op == Opcode::Andi || op == Opcode::Ori || op == Opcode::Xori; }

bool is_pseudo(std::string_view m) {
  return m == "li" || m == "la" || m == "mv" || m == "j" || m == "call" || m == "ret";
}

struct Line {
  int number = 0;
  std::vector<std::string> labels;
  std::string op;        // lowercased mnemonic or directive
  std::string operands;  // raw operand text
};

Line split_line(std::string_view raw, int number) {
  Line ln;
  ln.number = number;
  auto cut = raw.find_first_of("#;");
  if (cut != std::string_view::npos) raw = raw.substr(0, cut);
  auto s = trim(raw);
  for (;;) {
    std::size_t i = 0;
    while (i < s.size() && is_ident_char(s[i])) ++i;
    if (i > 0 && i < s.size() && s[i] == ':' && is_ident_start(s[0])) {
      ln.labels.emplace_back(s.substr(0, i));
      s = trim(s.substr(i + 1));
      continue;
    }
    break;
  }
  if (s.empty()) return ln;
  std::size_t i = 0;
  while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  ln.op = std::string(s.substr(0, i));
  std::transform(ln.op.begin(), ln.op.end(), ln.op.begin(), [](unsigned char c) { return std::tolower(c); });
  ln.operands = std::string(trim(s.substr(i)));
  return ln;
}

class Assembler {
 public:
  AsmResult run(std::string_view source) {
    std::size_t pos = 0;
    int number = 0;
    while (pos <= source.size()) {
      auto nl = source.find('\n', pos);
      auto raw = source.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      lines_.push_back(split_line(raw, ++number));
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
    pass1();
    pass2();
    AsmResult r;
    if (!errors_.empty()) {
      std::stable_sort(errors_.begin(), errors_.end(),
                       [](const AsmError& a, const AsmError& b) { return a.line < b.line; });
      r.errors = std::move(errors_);
      return r;
    }
    prog_.symbols = symbols_;
    for (const auto& g : globals_) prog_.entry_points[g] = symbols_.at(g);
    r.program = std::move(prog_);
    return r;
  }

 private:
  std::vector<Line> lines_;
  std::vector<AsmError> errors_;
  SymbolTable symbols_;
  std::vector<std::string> globals_;
  std::vector<std::uint32_t> line_addr_;  // location of each line's first word
  std::vector<int> line_size_;            // words emitted by each line
  std::set<int> bad_lines_;               // lines that already failed in pass 1
  isa::Program prog_;

  void error(int line, AsmErrorKind kind, std::string msg) { errors_.push_back({line, kind, std::move(msg)}); }

  // Returns the number of words a line occupies, or -1 on error.
  int measure(const Line& ln, std::uint32_t& loc, bool& based) {
    const auto& op = ln.op;
    auto ops = split_operands(ln.operands);
    if (op.empty()) return 0;
    if (op[0] == '.') {
      if (op == ".org") {
        auto v = ops.size() == 1 ? parse_int(ops[0]) : std::nullopt;
        if (!v || *v < 0 || *v % 4 != 0 || *v > 0xFFFFFFFFll) {
          error(ln.number, AsmErrorKind::BadDirective, ".org needs one word-aligned address");
          return -1;
        }
        auto target = static_cast<std::uint32_t>(*v);
        if (!based) {
          loc = target;
          prog_.base_address = target;
          based = true;
        } else if (target < loc) {
          error(ln.number, AsmErrorKind::BadDirective, fmt::format(".org 0x{:x} moves backwards", target));
          return -1;
        } else {
          loc = target;
        }
        return 0;
      }
      if (op == ".align") {
        auto v = ops.size() == 1 ? parse_int(ops[0]) : std::nullopt;
        if (!v || *v < 4 || (*v & (*v - 1)) != 0) {
          error(ln.number, AsmErrorKind::BadDirective, ".align needs a power of two >= 4");
          return -1;
        }
        based = true;
        auto a = static_cast<std::uint32_t>(*v);
        auto aligned = (loc + a - 1) & ~(a - 1);
        auto n = static_cast<int>((aligned - loc) / 4);
        loc = aligned;
        return n;  // padding words already folded into loc
      }
      if (op == ".word") {
        if (ops.empty()) {
          error(ln.number, AsmErrorKind::OperandCount, ".word needs at least one value");
          return -1;
        }
        based = true;
        return static_cast<int>(ops.size());
      }
      if (op == ".double") {
        if (ops.empty()) {
          error(ln.number, AsmErrorKind::OperandCount, ".double needs at least one value");
          return -1;
        }
        based = true;
        return 2 * static_cast<int>(ops.size());
      }
      if (op == ".space") {
        auto v = ops.size() == 1 ? parse_int(ops[0]) : std::nullopt;
        if (!v || *v < 0 || *v % 4 != 0) {
          error(ln.number, AsmErrorKind::BadDirective, ".space needs a non-negative multiple of 4 bytes");
          return -1;
        }
        based = true;
        return static_cast<int>(*v / 4);
      }
      if (op == ".global") {
        if (ops.size() != 1 || !is_identifier(ops[0])) {
          error(ln.number, AsmErrorKind::BadDirective, ".global needs one label");
          return -1;
        }
        globals_.emplace_back(ops[0]);
        return 0;
      }
      error(ln.number, AsmErrorKind::BadDirective, "unknown directive " + op);
      return -1;
    }
    based = true;
    if (op == "li") {
      if (ops.size() != 2) {
        error(ln.number, AsmErrorKind::OperandCount, "li expects 2 operands");
        return -1;
      }
      auto v = parse_int(ops[1]);
      if (!v) {
        error(ln.number, AsmErrorKind::BadOperand, "li needs a numeric literal (use la for labels)");
        return -1;
      }
      if (*v < -0x80000000ll || *v > 0xFFFFFFFFll) {
        error(ln.number, AsmErrorKind::ImmediateRange, "li value does not fit in 32 bits");
        return -1;
      }
      return (*v >= -32768 && *v <= 32767) ? 1 : 2;
    }
    if (op == "la") return 2;
    if (is_pseudo(op)) return 1;
    if (!lookup_mnemonic(op)) {
      error(ln.number, AsmErrorKind::UnknownMnemonic, "unknown mnemonic '" + op + "'");
      return -1;
    }
    return 1;
  }

  void pass1() {
    std::uint32_t loc = 0;
    bool based = false;
    line_addr_.assign(lines_.size(), 0);
    line_size_.assign(lines_.size(), 0);
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      const auto& ln = lines_[i];
      // .align folds its padding into loc before labels bind, so evaluate it first.
      if (ln.op == ".align" || ln.op == ".org") {
        int n = measure(ln, loc, based);
        if (n < 0) bad_lines_.insert(ln.number);
        line_addr_[i] = loc;
        bind_labels(ln, loc);
        continue;
      }
      bind_labels(ln, loc);
      line_addr_[i] = loc;
      int n = measure(ln, loc, based);
      if (n < 0) {
        bad_lines_.insert(ln.number);
        n = ln.op.empty() || ln.op[0] == '.' ? 0 : 1;
      }
      line_size_[i] = n;
      loc += static_cast<std::uint32_t>(n) * 4u;
    }
    for (const auto& g : globals_) {
      if (!symbols_.count(g)) error(0, AsmErrorKind::UndefinedLabel, "global '" + g + "' is never defined");
    }
    // fix up the line number for undefined globals
    for (auto& e : errors_) {
      if (e.line != 0) continue;
      for (const auto& ln : lines_) {
        if (ln.op == ".global" && e.message.find("'" + trim_copy(ln.operands) + "'") != std::string::npos) {
          e.line = ln.number;
        }
      }
    }
  }

  static std::string trim_copy(std::string_view s) { return std::string(trim(s)); }

  void bind_labels(const Line& ln, std::uint32_t loc) {
    for (const auto& l : ln.labels) {
      if (!symbols_.emplace(l, loc).second) {
        error(ln.number, AsmErrorKind::DuplicateLabel, "label '" + l + "' already defined");
      }
    }
  }

  void emit_at(std::uint32_t addr, std::uint32_t word) {
    auto idx = (addr - prog_.base_address) / 4;
    if (prog_.words.size() <= idx) prog_.words.resize(idx + 1, 0);
    prog_.words[idx] = word;
  }

  void pass2() {
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      const auto& ln = lines_[i];
      if (ln.op.empty() || bad_lines_.count(ln.number)) continue;
      auto addr = line_addr_[i];
      if (ln.op == ".org" || ln.op == ".align" || ln.op == ".global") {
        // make sure gaps materialise as zero words
        if (addr > prog_.base_address && prog_.words.size() < (addr - prog_.base_address) / 4) {
          prog_.words.resize((addr - prog_.base_address) / 4, 0);
        }
        continue;
      }
      auto ops = split_operands(ln.operands);
      if (ln.op[0] == '.') {
        directive(ln, ops, addr);
        continue;
      }
      std::vector<Instruction> out;
      if (auto err = build(ln.op, ops, addr, out)) {
        error(ln.number, err->kind, err->message);
        continue;
      }
      for (const auto& in : out) {
        try {
          emit_at(addr, isa::encode(in));
        } catch (const isa::EncodingRange& ex) {
          error(ln.number, AsmErrorKind::ImmediateRange, ex.what());
        }
        addr += 4;
      }
    }
  }

  void directive(const Line& ln, const std::vector<std::string_view>& ops, std::uint32_t addr) {
    if (ln.op == ".space") {
      auto n = static_cast<std::uint32_t>(*parse_int(ops[0]));
      for (std::uint32_t k = 0; k < n / 4; ++k) emit_at(addr + 4 * k, 0);
      return;
    }
    for (auto o : ops) {
      if (ln.op == ".word") {
        auto e = parse_expr(o);
        if (!e) {
          error(ln.number, AsmErrorKind::BadOperand, "bad .word value '" + std::string(o) + "'");
        } else {
          auto v = eval(*e, symbols_);
          if (auto* pe = std::get_if<ParseError>(&v)) {
            error(ln.number, pe->kind, pe->message);
          } else {
            auto n = std::get<std::int64_t>(v);
            if (n < -0x80000000ll || n > 0xFFFFFFFFll) {
              error(ln.number, AsmErrorKind::ImmediateRange, ".word value does not fit in 32 bits");
            } else {
              emit_at(addr, static_cast<std::uint32_t>(n));
            }
          }
        }
        addr += 4;
      } else {
        auto d = parse_double(o);
        if (!d) {
          error(ln.number, AsmErrorKind::BadOperand, "bad .double value '" + std::string(o) + "'");
        } else {
          std::uint64_t bits;
          std::memcpy(&bits, &*d, sizeof bits);
          emit_at(addr, static_cast<std::uint32_t>(bits));
          emit_at(addr + 4, static_cast<std::uint32_t>(bits >> 32));
        }
        addr += 8;
      }
    }
  }

  using BuildResult = std::optional<ParseError>;

  static ParseError count_error(std::string_view m, std::size_t want, std::size_t got) {
    return {AsmErrorKind::OperandCount, fmt::format("{} expects {} operand(s), got {}", m, want, got)};
  }

  std::variant<std::int64_t, ParseError> value(std::string_view s) const {
    auto e = parse_expr(s);
    if (!e) return ParseError{AsmErrorKind::BadOperand, "bad operand '" + std::string(s) + "'"};
    return eval(*e, symbols_);
  }

  static std::optional<ParseError> reg(std::string_view s, char prefix, int count, std::uint8_t& out) {
    auto r = parse_reg(s, prefix, count);
    if (!r) {
      return ParseError{AsmErrorKind::BadOperand,
                        fmt::format("expected {} register, got '{}'", prefix == 'r' ? "integer" : "FP", s)};
    }
    out = static_cast<std::uint8_t>(*r);
    return std::nullopt;
  }

  std::optional<ParseError> imm16(std::string_view s, Opcode op, std::int32_t& out) const {
    auto v = value(s);
    if (auto* pe = std::get_if<ParseError>(&v)) return *pe;
    auto n = std::get<std::int64_t>(v);
    bool unsigned_ok = is_logical_imm(op) || op == Opcode::Lui;
    if (unsigned_ok && n >= 0 && n <= 0xFFFF) {
      out = static_cast<std::int16_t>(static_cast<std::uint16_t>(n));
      return std::nullopt;
    }
    if (n < -32768 || n > 32767) {
      return ParseError{AsmErrorKind::ImmediateRange, fmt::format("immediate {} does not fit in 16 bits", n)};
    }
    out = static_cast<std::int32_t>(n);
    return std::nullopt;
  }

  std::optional<ParseError> mem_operand(std::string_view s, std::uint8_t& base, std::int32_t& off) const {
    auto open = s.rfind('(');
    if (open == std::string_view::npos || s.back() != ')') {
      return ParseError{AsmErrorKind::BadOperand, "expected imm(rN), got '" + std::string(s) + "'"};
    }
    if (auto e = reg(s.substr(open + 1, s.size() - open - 2), 'r', isa::kNumIntRegs, base)) return e;
    auto imm_text = trim(s.substr(0, open));
    if (imm_text.empty()) {
      off = 0;
      return std::nullopt;
    }
    return imm16(imm_text, Opcode::Addi, off);
  }

  // Branch/jump target: a label (resolved PC-relative) or a literal word offset.
  std::optional<ParseError> target(std::string_view s, std::uint32_t pc, std::int32_t& out, bool wide) const {
    std::int64_t off;
    if (auto n = parse_int(s)) {
      off = *n;
    } else {
      auto v = value(s);
      if (auto* pe = std::get_if<ParseError>(&v)) return *pe;
      auto dest = std::get<std::int64_t>(v);
      if ((dest - pc) % 4 != 0) return ParseError{AsmErrorKind::BadOperand, "branch target is not word aligned"};
      off = (dest - static_cast<std::int64_t>(pc)) / 4;
    }
    std::int64_t lim = wide ? (1ll << 25) : (1ll << 15);
    if (off < -lim || off >= lim) {
      return ParseError{AsmErrorKind::ImmediateRange, fmt::format("branch offset {} out of reach", off)};
    }
    out = static_cast<std::int32_t>(off);
    return std::nullopt;
  }

  BuildResult build(const std::string& m, const std::vector<std::string_view>& ops, std::uint32_t pc,
                    std::vector<Instruction>& out) {
    // pseudo-instructions first
    if (m == "li") {
      std::uint8_t rd;
      if (auto e = reg(ops[0], 'r', 32, rd)) return e;
      auto v = *parse_int(ops[1]);
      auto u = static_cast<std::uint32_t>(v);
      if (v >= -32768 && v <= 32767) {
        out.push_back(isa::make_i(Opcode::Addi, rd, 0, static_cast<std::int32_t>(v)));
      } else {
        out.push_back(isa::make_i(Opcode::Lui, rd, 0, static_cast<std::int16_t>(u >> 16)));
        out.push_back(isa::make_i(Opcode::Ori, rd, rd, static_cast<std::int16_t>(u & 0xFFFFu)));
      }
      return std::nullopt;
    }
    if (m == "la") {
      if (ops.size() != 2) return count_error(m, 2, ops.size());
      std::uint8_t rd;
      if (auto e = reg(ops[0], 'r', 32, rd)) return e;
      auto v = value(ops[1]);
      if (auto* pe = std::get_if<ParseError>(&v)) return *pe;
      auto u = static_cast<std::uint32_t>(std::get<std::int64_t>(v));
      out.push_back(isa::make_i(Opcode::Lui, rd, 0, static_cast<std::int16_t>(u >> 16)));
      out.push_back(isa::make_i(Opcode::Ori, rd, rd, static_cast<std::int16_t>(u & 0xFFFFu)));
      return std::nullopt;
    }
    if (m == "mv") {
      if (ops.size() != 2) return count_error(m, 2, ops.size());
      std::uint8_t rd, rs;
      if (auto e = reg(ops[0], 'r', 32, rd)) return e;
      if (auto e = reg(ops[1], 'r', 32, rs)) return e;
      out.push_back(isa::make_i(Opcode::Addi, rd, rs, 0));
      return std::nullopt;
    }
    if (m == "j") {
      if (ops.size() != 1) return count_error(m, 1, ops.size());
      std::int32_t off;
      if (auto e = target(ops[0], pc, off, false)) return e;
      out.push_back(isa::make_branch(Opcode::Beq, 0, 0, off));
      return std::nullopt;
    }
    if (m == "call") {
      if (ops.size() != 1) return count_error(m, 1, ops.size());
      std::int32_t off;
      if (auto e = target(ops[0], pc, off, true)) return e;
      out.push_back(isa::make_jal(off));
      return std::nullopt;
    }
    if (m == "ret") {
      if (!ops.empty()) return count_error(m, 0, ops.size());
      out.push_back(isa::make_i(Opcode::Jalr, 0, isa::kLinkReg, 0));
      return std::nullopt;
    }

    auto mn = *lookup_mnemonic(m);
    Instruction in;
    in.op = mn.op;
    in.mode = mn.mode;
    auto need = [&](std::size_t n) -> std::optional<ParseError> {
      if (ops.size() != n) return count_error(m, n, ops.size());
      return std::nullopt;
    };
    std::optional<ParseError> e;
    switch (isa::info(mn.op).format) {
      case Format::R:
        if ((e = need(3)) || (e = reg(ops[0], 'r', 32, in.rd)) || (e = reg(ops[1], 'r', 32, in.rs1)) ||
            (e = reg(ops[2], 'r', 32, in.rs2)))
          return e;
        break;
      case Format::I:
      case Format::Jr:
        if ((e = need(3)) || (e = reg(ops[0], 'r', 32, in.rd)) || (e = reg(ops[1], 'r', 32, in.rs1)) ||
            (e = imm16(ops[2], mn.op, in.imm)))
          return e;
        break;
      case Format::U:
        if ((e = need(2)) || (e = reg(ops[0], 'r', 32, in.rd)) || (e = imm16(ops[1], mn.op, in.imm))) return e;
        break;
      case Format::Mem:
        if ((e = need(2)) || (e = reg(ops[0], 'r', 32, in.rd)) || (e = mem_operand(ops[1], in.rs1, in.imm)))
          return e;
        break;
      case Format::Store:
        if ((e = need(2)) || (e = reg(ops[0], 'r', 32, in.rs2)) || (e = mem_operand(ops[1], in.rs1, in.imm)))
          return e;
        break;
      case Format::B:
        if ((e = need(3)) || (e = reg(ops[0], 'r', 32, in.rs1)) || (e = reg(ops[1], 'r', 32, in.rs2)) ||
            (e = target(ops[2], pc, in.imm, false)))
          return e;
        break;
      case Format::J:
        if ((e = need(1)) || (e = target(ops[0], pc, in.imm, true))) return e;
        break;
      case Format::FR:
        if ((e = need(3)) || (e = reg(ops[0], 'f', 16, in.rd)) || (e = reg(ops[1], 'f', 16, in.rs1)) ||
            (e = reg(ops[2], 'f', 16, in.rs2)))
          return e;
        break;
      case Format::FLong:
        if (mn.op == Opcode::Fsqrt) {
          if ((e = need(2)) || (e = reg(ops[0], 'f', 16, in.rd)) || (e = reg(ops[1], 'f', 16, in.rs1))) return e;
        } else if ((e = need(3)) || (e = reg(ops[0], 'f', 16, in.rd)) || (e = reg(ops[1], 'f', 16, in.rs1)) ||
                   (e = reg(ops[2], 'f', 16, in.rs2))) {
          return e;
        }
        break;
      case Format::FCvt: {
        if ((e = need(2))) return e;
        auto mode = static_cast<isa::CvtMode>(in.mode);
        char dst = mode == isa::CvtMode::DoubleToInt ? 'r' : 'f';
        char src = mode == isa::CvtMode::IntToDouble ? 'r' : 'f';
        if ((e = reg(ops[0], dst, dst == 'r' ? 32 : 16, in.rd)) || (e = reg(ops[1], src, src == 'r' ? 32 : 16, in.rs1)))
          return e;
        break;
      }
      case Format::FMem:
        if ((e = need(2)) || (e = reg(ops[0], 'f', 16, in.rd)) || (e = mem_operand(ops[1], in.rs1, in.imm)))
          return e;
        break;
      case Format::FStore:
        if ((e = need(2)) || (e = reg(ops[0], 'f', 16, in.rs2)) || (e = mem_operand(ops[1], in.rs1, in.imm)))
          return e;
        break;
      case Format::Rd:
        if ((e = need(1)) || (e = reg(ops[0], 'r', 32, in.rd))) return e;
        break;
      case Format::None:
        if ((e = need(0))) return e;
        break;
    }
    out.push_back(in);
    return std::nullopt;
  }
};

}  // namespace

AsmResult assemble(std::string_view source) { return Assembler{}.run(source); }

isa::Program assemble_or_throw(std::string_view source) {
  auto r = assemble(source);
  if (!r.ok()) throw AsmFailure(std::move(r.errors));
  return std::move(*r.program);
}

std::string format_instruction(const Instruction& in) {
  auto m = isa::mnemonic(in.op);
  auto r = [](int n) { return fmt::format("r{}", n); };
  auto f = [](int n) { return fmt::format("f{}", n); };
  switch (isa::info(in.op).format) {
    case Format::R: return fmt::format("{} {}, {}, {}", m, r(in.rd), r(in.rs1), r(in.rs2));
    case Format::I:
      if (is_logical_imm(in.op)) {
        return fmt::format("{} {}, {}, 0x{:x}", m, r(in.rd), r(in.rs1), static_cast<std::uint16_t>(in.imm));
      }
      return fmt::format("{} {}, {}, {}", m, r(in.rd), r(in.rs1), in.imm);
    case Format::U: return fmt::format("{} {}, 0x{:x}", m, r(in.rd), static_cast<std::uint16_t>(in.imm));
    case Format::Mem: return fmt::format("{} {}, {}({})", m, r(in.rd), in.imm, r(in.rs1));
    case Format::Store: return fmt::format("{} {}, {}({})", m, r(in.rs2), in.imm, r(in.rs1));
    case Format::B: return fmt::format("{} {}, {}, {}", m, r(in.rs1), r(in.rs2), in.imm);
    case Format::J: return fmt::format("{} {}", m, in.imm);
    case Format::Jr: return fmt::format("{} {}, {}, {}", m, r(in.rd), r(in.rs1), in.imm);
    case Format::FR: return fmt::format("{} {}, {}, {}", m, f(in.rd), f(in.rs1), f(in.rs2));
    case Format::FLong: {
      auto suffix = in.mode ? ".s" : ".d";
      if (in.op == Opcode::Fsqrt) return fmt::format("{}{} {}, {}", m, suffix, f(in.rd), f(in.rs1));
      return fmt::format("{}{} {}, {}, {}", m, suffix, f(in.rd), f(in.rs1), f(in.rs2));
    }
    case Format::FCvt:
      switch (static_cast<isa::CvtMode>(in.mode)) {
        case isa::CvtMode::RoundSingle: return fmt::format("fcvt.s.d {}, {}", f(in.rd), f(in.rs1));
        case isa::CvtMode::IntToDouble: return fmt::format("fcvt.d.w {}, {}", f(in.rd), r(in.rs1));
        case isa::CvtMode::DoubleToInt: return fmt::format("fcvt.w.d {}, {}", r(in.rd), f(in.rs1));
      }
      break;
    case Format::FMem: return fmt::format("{} {}, {}({})", m, f(in.rd), in.imm, r(in.rs1));
    case Format::FStore: return fmt::format("{} {}, {}({})", m, f(in.rs2), in.imm, r(in.rs1));
    case Format::Rd: return fmt::format("{} {}", m, r(in.rd));
    case Format::None: return std::string(m);
  }
  return "illegal";
}

std::string disassemble_word(std::uint32_t word) {
  auto in = isa::decode(word);
  if (in.op == Opcode::Illegal) return fmt::format(".word 0x{:08x}", word);
  return format_instruction(in);
}

std::string disassemble(const isa::Program& p) {
  std::string out;
  if (p.base_address != 0) out += fmt::format(".org 0x{:x}\n", p.base_address);
  for (auto w : p.words) {
    out += disassemble_word(w);
    out += '\n';
  }
  return out;
}

}  // namespace ajt::assembler
