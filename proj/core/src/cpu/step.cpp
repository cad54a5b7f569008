#include "nlemu/cpu/step.hpp"

#include <algorithm>
#include <array>
#include <vector>

#include "nlemu/error.hpp"

namespace nlemu {

std::string_view termination_name(TerminationReason r) {
  switch (r) {
    case TerminationReason::budget_exhausted: return "budget_exhausted";
    case TerminationReason::decode_error: return "decode_error";
    case TerminationReason::memory_fault: return "memory_fault";
    case TerminationReason::loop_detected: return "loop_detected";
    case TerminationReason::clean_return: return "clean_return";
    case TerminationReason::unmodeled_instruction: return "unmodeled_instruction";
    case TerminationReason::syscall_unmodeled: return "syscall_unmodeled";
  }
  return "?";
}

std::optional<TerminationReason> parse_termination(std::string_view name) {
  for (std::size_t i = 0; i < kTerminationReasonCount; ++i) {
    const auto r = static_cast<TerminationReason>(i);
    if (termination_name(r) == name) return r;
  }
  return std::nullopt;
}

namespace {

constexpr std::uint32_t size_mask(unsigned size) {
  return size == 4 ? 0xFFFF'FFFFu : (size == 2 ? 0xFFFFu : 0xFFu);
}

constexpr std::uint32_t sign_bit(unsigned size) { return 1u << (size * 8 - 1); }

void set_zs(Flags& f, std::uint32_t r, unsigned size) {
  f.zf = (r & size_mask(size)) == 0;
  f.sf = (r & sign_bit(size)) != 0;
}

std::uint32_t alu(Mnemonic m, std::uint32_t a, std::uint32_t b, unsigned size, Flags& f) {
  const std::uint32_t mask = size_mask(size);
  const std::uint32_t sign = sign_bit(size);
  a &= mask;
  b &= mask;
  std::uint32_t r = 0;
  switch (m) {
    case Mnemonic::add:
      r = (a + b) & mask;
      f.cf = r < a;
      f.of = ((a ^ r) & (b ^ r) & sign) != 0;
      break;
    case Mnemonic::sub:
    case Mnemonic::cmp:
      r = (a - b) & mask;
      f.cf = a < b;
      f.of = ((a ^ b) & (a ^ r) & sign) != 0;
      break;
    case Mnemonic::and_:
    case Mnemonic::test:
      r = a & b;
      f.cf = f.of = false;
      break;
    case Mnemonic::or_:
      r = a | b;
      f.cf = f.of = false;
      break;
    case Mnemonic::xor_:
      r = a ^ b;
      f.cf = f.of = false;
      break;
    default:
      break;
  }
  set_zs(f, r, size);
  return r;
}

bool condition_holds(Condition c, const Flags& f) {
  switch (c) {
    case Condition::o: return f.of;
    case Condition::no: return !f.of;
    case Condition::b: return f.cf;
    case Condition::ae: return !f.cf;
    case Condition::e: return f.zf;
    case Condition::ne: return !f.zf;
    case Condition::be: return f.cf || f.zf;
    case Condition::a: return !f.cf && !f.zf;
    case Condition::s: return f.sf;
    case Condition::ns: return !f.sf;
    case Condition::l: return f.sf != f.of;
    case Condition::ge: return f.sf == f.of;
    case Condition::le: return f.zf || f.sf != f.of;
    case Condition::g: return !f.zf && f.sf == f.of;
    case Condition::p:
    case Condition::np: return false;  // decoded as unmodeled
  }
  return false;
}

// One instruction's worth of execution against a scratch copy of the state.
class Executor {
 public:
  Executor(CpuState& s, MemoryImage& m, const StepOptions& opt, const Instruction& in)
      : s_(s), m_(m), opt_(opt), in_(in), eip_(s.eip), next_(s.eip + in.length) {}

  // Returns a termination reason, or nullopt when the instruction retired.
  std::optional<TerminationReason> run();

  std::uint32_t next() const { return next_; }
  const std::optional<ControlMarker>& marker() const { return marker_; }
  bool clean_return() const { return clean_return_; }

 private:
  using Term = std::optional<TerminationReason>;
  static constexpr Term kOk = std::nullopt;
  static constexpr Term kFault = TerminationReason::memory_fault;
  static constexpr Term kUnmodeled = TerminationReason::unmodeled_instruction;

  std::uint32_t reg_get(std::uint8_t r, unsigned size) const {
    if (size == 4) return s_.regs[r];
    if (size == 2) return s_.regs[r] & 0xFFFF;
    return r < 4 ? (s_.regs[r] & 0xFF) : ((s_.regs[r - 4] >> 8) & 0xFF);
  }

  void reg_set(std::uint8_t r, unsigned size, std::uint32_t v) {
    if (size == 4) {
      s_.regs[r] = v;
    } else if (size == 2) {
      s_.regs[r] = (s_.regs[r] & 0xFFFF'0000u) | (v & 0xFFFF);
    } else if (r < 4) {
      s_.regs[r] = (s_.regs[r] & 0xFFFF'FF00u) | (v & 0xFF);
    } else {
      s_.regs[r - 4] = (s_.regs[r - 4] & 0xFFFF'00FFu) | ((v & 0xFF) << 8);
    }
  }

  Term effective_address(const MemExpr& mem, std::uint32_t& out, bool apply_segment = true) const {
    std::uint32_t a = static_cast<std::uint32_t>(mem.disp);
    if (mem.base >= 0) a += s_.regs[static_cast<std::size_t>(mem.base)];
    if (mem.index >= 0) a += s_.regs[static_cast<std::size_t>(mem.index)] * mem.scale;
    if (apply_segment) {
      if (mem.segment == Segment::gs) return kUnmodeled;
      if (mem.segment == Segment::fs) a += s_.fs_base;
    }
    out = a;
    return kOk;
  }

  Term load(std::uint32_t addr, unsigned size, std::uint32_t& out) {
    std::array<std::uint8_t, 4> raw{};
    if (!m_.read(addr, std::span(raw.data(), size))) return kFault;
    m_.log(AccessKind::read, addr, size, eip_);
    out = 0;
    for (unsigned i = 0; i < size; ++i) out |= static_cast<std::uint32_t>(raw[i]) << (8 * i);
    return kOk;
  }

  Term store(std::uint32_t addr, unsigned size, std::uint32_t v) {
    std::array<std::uint8_t, 4> raw{};
    for (unsigned i = 0; i < size; ++i) raw[i] = static_cast<std::uint8_t>(v >> (8 * i));
    if (!m_.write(addr, std::span(raw.data(), size))) return kFault;
    m_.log(AccessKind::write, addr, size, eip_);
    return kOk;
  }

  // Reads an operand; memory operands resolve their address into `addr`.
  Term get(const Operand& op, std::uint32_t& out, std::uint32_t* addr = nullptr) {
    switch (op.kind) {
      case OperandKind::reg:
        out = reg_get(op.reg, op.size);
        return kOk;
      case OperandKind::imm:
        out = op.imm;
        return kOk;
      case OperandKind::mem: {
        std::uint32_t a = 0;
        if (auto t = effective_address(op.mem, a)) return t;
        if (addr != nullptr) *addr = a;
        return load(a, op.size, out);
      }
      default:
        return kUnmodeled;
    }
  }

  // Writes an operand. For memory, `addr` must come from a preceding get().
  Term put(const Operand& op, std::uint32_t v, std::uint32_t addr) {
    if (op.kind == OperandKind::reg) {
      reg_set(op.reg, op.size, v);
      return kOk;
    }
    if (op.kind == OperandKind::mem) return store(addr, op.size, v);
    return kUnmodeled;
  }

  Term put_fresh(const Operand& op, std::uint32_t v) {
    std::uint32_t addr = 0;
    if (op.kind == OperandKind::mem) {
      if (auto t = effective_address(op.mem, addr)) return t;
    }
    return put(op, v, addr);
  }

  Term push(std::uint32_t v) {
    const std::uint32_t esp = s_.reg(Reg::esp) - 4;
    if (auto t = store(esp, 4, v)) return t;
    s_.reg(Reg::esp) = esp;
    return kOk;
  }

  Term pop(std::uint32_t& v) {
    const std::uint32_t esp = s_.reg(Reg::esp);
    if (auto t = load(esp, 4, v)) return t;
    s_.reg(Reg::esp) = esp + 4;
    return kOk;
  }

  Term exec_alu();
  Term exec_unary();
  Term exec_call();
  Term exec_string();
  Term exec_fnstenv();
  Term exec_service(std::uint32_t args, bool via_sysenter);

  Term syscall_arg(std::uint32_t args, unsigned i, std::uint32_t& out) {
    const std::uint32_t addr = args + 4 * i;
    auto v = m_.read_u32(addr);
    if (!v) return kFault;
    m_.log(AccessKind::syscall_read, addr, 4, eip_);
    out = *v;
    return kOk;
  }

  bool service_write_u32(std::uint32_t addr, std::uint32_t v) {
    const std::uint8_t raw[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                                 static_cast<std::uint8_t>(v >> 16),
                                 static_cast<std::uint8_t>(v >> 24)};
    if (!m_.write(addr, raw)) return false;
    m_.log(AccessKind::syscall_write, addr, 4, eip_);
    return true;
  }

  std::uint32_t service_allocate(std::uint32_t args);
  std::uint32_t service_copy(std::uint32_t args);

  CpuState& s_;
  MemoryImage& m_;
  const StepOptions& opt_;
  const Instruction& in_;
  std::uint32_t eip_;
  std::uint32_t next_;
  std::optional<ControlMarker> marker_;
  bool clean_return_ = false;
};

Executor::Term Executor::exec_alu() {
  const Operand& dst = in_.dst();
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::uint32_t addr = 0;
  if (auto t = get(dst, a, &addr)) return t;
  if (auto t = get(in_.src(), b)) return t;
  const std::uint32_t r = alu(in_.mnemonic, a, b, dst.size, s_.flags);
  if (in_.mnemonic == Mnemonic::cmp || in_.mnemonic == Mnemonic::test) return kOk;
  return put(dst, r, addr);
}

Executor::Term Executor::exec_unary() {
  const Operand& dst = in_.dst();
  const unsigned size = dst.size;
  std::uint32_t a = 0;
  std::uint32_t addr = 0;
  if (auto t = get(dst, a, &addr)) return t;
  std::uint32_t r = 0;
  Flags& f = s_.flags;
  switch (in_.mnemonic) {
    case Mnemonic::inc: {
      const bool cf = f.cf;
      r = alu(Mnemonic::add, a, 1, size, f);
      f.cf = cf;
      break;
    }
    case Mnemonic::dec: {
      const bool cf = f.cf;
      r = alu(Mnemonic::sub, a, 1, size, f);
      f.cf = cf;
      break;
    }
    case Mnemonic::not_:
      r = ~a & size_mask(size);
      break;
    case Mnemonic::neg:
      r = alu(Mnemonic::sub, 0, a, size, f);
      f.cf = (a & size_mask(size)) != 0;
      break;
    default:
      return kUnmodeled;
  }
  return put(dst, r, addr);
}

Executor::Term Executor::exec_call() {
  const Operand& op = in_.dst();
  std::uint32_t target = 0;
  MarkerKind kind = MarkerKind::call_rel;
  if (op.kind == OperandKind::rel) {
    target = next_ + static_cast<std::uint32_t>(op.rel);
  } else {
    kind = MarkerKind::call_indirect;
    if (auto t = get(op, target)) return t;
  }
  if (auto t = push(next_)) return t;
  marker_ = ControlMarker{kind,
                          eip_,
                          target,
                          next_,
                          s_.reg(Reg::esp),
                          static_cast<std::uint32_t>(m_.access_log().size())};
  next_ = target;
  return kOk;
}

Executor::Term Executor::exec_string() {
  auto& ecx = s_.reg(Reg::ecx);
  if (in_.prefixes.rep && ecx == 0) return kOk;
  auto& esi = s_.reg(Reg::esi);
  auto& edi = s_.reg(Reg::edi);
  switch (in_.mnemonic) {
    case Mnemonic::stosb:
      if (auto t = store(edi, 1, s_.reg(Reg::eax) & 0xFF)) return t;
      ++edi;
      break;
    case Mnemonic::lodsb: {
      std::uint32_t v = 0;
      if (auto t = load(esi, 1, v)) return t;
      reg_set(0, 1, v);
      ++esi;
      break;
    }
    case Mnemonic::movsb: {
      std::uint32_t v = 0;
      if (auto t = load(esi, 1, v)) return t;
      if (auto t = store(edi, 1, v)) return t;
      ++esi;
      ++edi;
      break;
    }
    default:
      return kUnmodeled;
  }
  if (in_.prefixes.rep) {
    --ecx;
    if (ecx != 0) next_ = eip_;  // next iteration re-executes this instruction
  }
  return kOk;
}

Executor::Term Executor::exec_fnstenv() {
  std::uint32_t env = 0;
  if (auto t = effective_address(in_.dst().mem, env)) return t;
  std::array<std::uint8_t, kFpuEnvSize> raw{};
  auto put32 = [&raw](std::size_t off, std::uint32_t v) {
    for (std::size_t i = 0; i < 4; ++i) raw[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
  };
  put32(0, 0xFFFF'037Fu);                  // control word
  put32(4, 0xFFFF'0000u);                  // status word
  put32(8, 0xFFFF'FFFFu);                  // tag word
  put32(kFpuEnvIpOffset, s_.fpu_last_ip);  // FPU instruction pointer
  put32(16, 0);                            // CS selector / opcode
  put32(20, 0);                            // operand pointer
  put32(24, 0xFFFF'0000u);                 // operand selector
  if (!m_.write(env, raw)) return kFault;
  m_.log(AccessKind::write, env, kFpuEnvSize, eip_);
  marker_ = ControlMarker{MarkerKind::fpu_env_store,
                          eip_,
                          env,
                          s_.fpu_last_ip,
                          env + kFpuEnvIpOffset,
                          static_cast<std::uint32_t>(m_.access_log().size())};
  return kOk;
}

std::uint32_t Executor::service_allocate(std::uint32_t args) {
  std::uint32_t base_ptr = 0;
  std::uint32_t size_ptr = 0;
  if (syscall_arg(args, 1, base_ptr) || syscall_arg(args, 3, size_ptr)) {
    return kStatusAccessViolation;
  }
  auto requested = m_.read_u32(size_ptr);
  if (!requested) return kStatusAccessViolation;
  m_.log(AccessKind::syscall_read, size_ptr, 4, eip_);
  if (*requested == 0 || *requested > opt_.syscalls.max_transfer) return kStatusInvalidParameter;

  std::uint32_t next_base = opt_.scratch_base;
  std::uint32_t count = 0;
  for (const auto& r : m_.regions()) {
    if (r.kind != RegionKind::scratch) continue;
    ++count;
    next_base = std::max<std::uint32_t>(next_base, static_cast<std::uint32_t>(r.end()) + 0x1000);
  }
  if (count >= opt_.syscalls.max_scratch_regions) return kStatusNoMemory;
  const std::uint32_t rounded = (*requested + 0xFFF) & ~0xFFFu;
  try {
    m_.map({next_base, rounded, RegionKind::scratch, true, true});
  } catch (const LayoutError&) {
    return kStatusNoMemory;
  }
  if (!service_write_u32(base_ptr, next_base) || !service_write_u32(size_ptr, rounded)) {
    return kStatusAccessViolation;
  }
  return kStatusSuccess;
}

std::uint32_t Executor::service_copy(std::uint32_t args) {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint32_t n = 0;
  std::uint32_t done_ptr = 0;
  if (syscall_arg(args, 1, src) || syscall_arg(args, 2, dst) || syscall_arg(args, 3, n) ||
      syscall_arg(args, 4, done_ptr)) {
    return kStatusAccessViolation;
  }
  if (n > opt_.syscalls.max_transfer) return kStatusInvalidParameter;
  std::vector<std::uint8_t> bytes(n);
  if (!m_.read(src, bytes)) return kStatusAccessViolation;
  m_.log(AccessKind::syscall_read, src, n, eip_);
  if (!m_.write(dst, bytes)) return kStatusAccessViolation;
  m_.log(AccessKind::syscall_write, dst, n, eip_);
  if (done_ptr != 0 && !service_write_u32(done_ptr, n)) return kStatusAccessViolation;
  return kStatusSuccess;
}

Executor::Term Executor::exec_service(std::uint32_t args, bool via_sysenter) {
  if (!opt_.syscalls.enabled) return TerminationReason::syscall_unmodeled;
  const std::uint32_t number = s_.reg(Reg::eax);
  std::uint32_t status = 0;
  if (number == opt_.syscalls.allocate_number) {
    status = service_allocate(args);
  } else if (number == opt_.syscalls.copy_number) {
    status = service_copy(args);
  } else {
    return TerminationReason::syscall_unmodeled;
  }
  s_.reg(Reg::eax) = status;
  if (via_sysenter) {
    // The user-mode stub returns through the address on top of the stack.
    std::uint32_t ret = 0;
    if (auto t = pop(ret)) return t;
    next_ = ret;
  }
  return kOk;
}

std::optional<TerminationReason> Executor::run() {
  const Operand& dst = in_.dst();
  switch (in_.mnemonic) {
    case Mnemonic::nop:
      return kOk;
    case Mnemonic::mov: {
      std::uint32_t v = 0;
      if (auto t = get(in_.src(), v)) return t;
      return put_fresh(dst, v);
    }
    case Mnemonic::lea: {
      std::uint32_t a = 0;
      effective_address(in_.src().mem, a, /*apply_segment=*/false);
      reg_set(dst.reg, dst.size, a);
      return kOk;
    }
    case Mnemonic::push: {
      std::uint32_t v = 0;
      if (auto t = get(dst, v)) return t;
      return push(v);
    }
    case Mnemonic::pop: {
      std::uint32_t v = 0;
      if (auto t = pop(v)) return t;
      return put_fresh(dst, v);
    }
    case Mnemonic::xchg: {
      std::uint32_t a = 0;
      std::uint32_t b = 0;
      std::uint32_t addr = 0;
      if (auto t = get(dst, a, &addr)) return t;
      if (auto t = get(in_.src(), b)) return t;
      if (auto t = put(dst, b, addr)) return t;
      reg_set(in_.src().reg, in_.src().size, a);
      return kOk;
    }
    case Mnemonic::add:
    case Mnemonic::or_:
    case Mnemonic::and_:
    case Mnemonic::sub:
    case Mnemonic::xor_:
    case Mnemonic::cmp:
    case Mnemonic::test:
      return exec_alu();
    case Mnemonic::inc:
    case Mnemonic::dec:
    case Mnemonic::not_:
    case Mnemonic::neg:
      return exec_unary();
    case Mnemonic::jmp: {
      if (dst.kind == OperandKind::rel) {
        next_ += static_cast<std::uint32_t>(dst.rel);
        return kOk;
      }
      std::uint32_t target = 0;
      if (auto t = get(dst, target)) return t;
      next_ = target;
      return kOk;
    }
    case Mnemonic::jcc:
      if (condition_holds(in_.condition, s_.flags)) next_ += static_cast<std::uint32_t>(dst.rel);
      return kOk;
    case Mnemonic::loop: {
      auto& ecx = s_.reg(Reg::ecx);
      --ecx;
      if (ecx != 0) next_ += static_cast<std::uint32_t>(dst.rel);
      return kOk;
    }
    case Mnemonic::call:
      return exec_call();
    case Mnemonic::ret: {
      std::uint32_t target = 0;
      if (auto t = pop(target)) return t;
      if (dst.kind == OperandKind::imm) s_.reg(Reg::esp) += dst.imm;
      next_ = target;
      if (opt_.return_sentinel && target == *opt_.return_sentinel) clean_return_ = true;
      return kOk;
    }
    case Mnemonic::stosb:
    case Mnemonic::movsb:
    case Mnemonic::lodsb:
      return exec_string();
    case Mnemonic::fldz:
      s_.fpu_last_ip = eip_;
      return kOk;
    case Mnemonic::fnstenv:
      return exec_fnstenv();
    case Mnemonic::rdtsc: {
      const std::uint64_t tsc = s_.retired * kRdtscTicksPerInstruction;
      s_.reg(Reg::eax) = static_cast<std::uint32_t>(tsc);
      s_.reg(Reg::edx) = static_cast<std::uint32_t>(tsc >> 32);
      return kOk;
    }
    case Mnemonic::sysenter:
      return exec_service(s_.reg(Reg::edx) + 8, /*via_sysenter=*/true);
    case Mnemonic::int_:
      if (dst.imm == 0x2E) return exec_service(s_.reg(Reg::edx), /*via_sysenter=*/false);
      return TerminationReason::syscall_unmodeled;
    case Mnemonic::unmodeled:
      return kUnmodeled;
  }
  return kUnmodeled;
}

}  // namespace

StepOutcome step(CpuState& state, MemoryImage& memory, const StepOptions& options) {
  StepOutcome out;
  out.events_begin = static_cast<std::uint32_t>(memory.access_log().size());
  out.events_end = out.events_begin;

  std::array<std::uint8_t, kMaxInstructionLength> window{};
  const std::size_t fetched = memory.fetch(state.eip, window);
  if (fetched == 0) {
    out.terminated = TerminationReason::memory_fault;
    return out;
  }
  const DecodeResult decoded = decode_instruction(std::span(window.data(), fetched), 0);
  const Instruction* insn = std::get_if<Instruction>(&decoded);
  if (insn == nullptr) {
    out.terminated = TerminationReason::decode_error;
    return out;
  }

  CpuState next = state;
  Executor exec(next, memory, options, *insn);
  const auto term = exec.run();
  out.events_end = static_cast<std::uint32_t>(memory.access_log().size());
  if (term) {
    out.terminated = term;
    return out;
  }

  const RegionSpec* stack = memory.region_of_kind(RegionKind::stack);
  const std::uint32_t esp = next.reg(Reg::esp);
  if (stack == nullptr || esp < stack->base || std::uint64_t{esp} > stack->end()) {
    out.terminated = TerminationReason::memory_fault;
    return out;
  }

  out.marker = exec.marker();
  out.branched = exec.next() != state.eip + insn->length;
  next.eip = exec.next();
  ++next.retired;
  state = next;
  if (exec.clean_return()) out.terminated = TerminationReason::clean_return;
  return out;
}

}  // namespace nlemu
