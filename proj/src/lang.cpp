#include "rlvr/lang.hpp"

#include <cassert>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace rlvr::lang {

const std::vector<Token>& vocabulary() {
  static const std::vector<Token> table = [] {
    std::vector<Token> v;
    for (int d = 0; d <= 9; ++d) {
      v.push_back({d, "PUSH_" + std::to_string(d)});
    }
    v.push_back({kAdd, "ADD"});
    v.push_back({kSub, "SUB"});
    v.push_back({kMul, "MUL"});
    v.push_back({kDiv, "DIV"});
    v.push_back({kMod, "MOD"});
    v.push_back({kNeg, "NEG"});
    v.push_back({kDup, "DUP"});
    v.push_back({kSwap, "SWAP"});
    v.push_back({kDrop, "DROP"});
    v.push_back({kIn, "IN"});
    v.push_back({kOut, "OUT"});
    v.push_back({kEos, "EOS"});
    return v;
  }();
  return table;
}

int token_from_mnemonic(std::string_view name) {
  static const std::unordered_map<std::string_view, int> index = [] {
    std::unordered_map<std::string_view, int> m;
    for (const Token& t : vocabulary()) m.emplace(t.mnemonic, t.id);
    return m;
  }();
  auto it = index.find(name);
  return it == index.end() ? -1 : it->second;
}

const std::string& mnemonic(int token_id) {
  return vocabulary().at(static_cast<std::size_t>(token_id)).mnemonic;
}

Program parse_text(std::string_view source, int t_max) {
  Program p;
  std::istringstream in{std::string(source)};
  std::string word;
  std::size_t pos = 0;
  while (in >> word) {
    int id = token_from_mnemonic(word);
    if (id < 0) {
      throw ParseError(word, pos, "unknown mnemonic '" + word +
                                      "' at position " + std::to_string(pos));
    }
    if (!p.tokens.empty() && p.tokens.back() == kEos) {
      throw ParseError(word, pos,
                       "token after EOS at position " + std::to_string(pos));
    }
    if (static_cast<int>(p.tokens.size()) >= t_max) {
      throw ParseError(word, pos, "program exceeds length cap " +
                                      std::to_string(t_max));
    }
    p.tokens.push_back(id);
    ++pos;
  }
  p.truncated = p.tokens.empty() || p.tokens.back() != kEos;
  return p;
}

std::string render(const Program& program) {
  std::string out;
  for (std::size_t i = 0; i < program.tokens.size(); ++i) {
    if (i) out += ' ';
    out += mnemonic(program.tokens[i]);
  }
  return out;
}

std::string_view exec_status_name(ExecStatus status) {
  switch (status) {
    case ExecStatus::kOk: return "Ok";
    case ExecStatus::kStackUnderflow: return "StackUnderflow";
    case ExecStatus::kDivByZero: return "DivByZero";
    case ExecStatus::kStepLimit: return "StepLimit";
    case ExecStatus::kOverflow: return "Overflow";
    case ExecStatus::kTruncated: return "Truncated";
  }
  return "?";
}

namespace {

constexpr std::int64_t kMinI64 = std::numeric_limits<std::int64_t>::min();

bool checked_binary(int op, std::int64_t lhs, std::int64_t rhs,
                    std::int64_t& out, ExecStatus& err) {
  switch (op) {
    case kAdd:
      if (__builtin_add_overflow(lhs, rhs, &out)) { err = ExecStatus::kOverflow; return false; }
      return true;
    case kSub:
      if (__builtin_sub_overflow(lhs, rhs, &out)) { err = ExecStatus::kOverflow; return false; }
      return true;
    case kMul:
      if (__builtin_mul_overflow(lhs, rhs, &out)) { err = ExecStatus::kOverflow; return false; }
      return true;
    case kDiv:
      if (rhs == 0) { err = ExecStatus::kDivByZero; return false; }
      if (lhs == kMinI64 && rhs == -1) { err = ExecStatus::kOverflow; return false; }
      out = lhs / rhs;
      return true;
    case kMod:
      if (rhs == 0) { err = ExecStatus::kDivByZero; return false; }
      if (lhs == kMinI64 && rhs == -1) { err = ExecStatus::kOverflow; return false; }
      out = lhs % rhs;
      return true;
    default:
      assert(false);
      return false;
  }
}

}  // namespace

ExecOutcome execute(const Program& program, std::span<const std::int64_t> inputs,
                    int step_limit) {
  ExecOutcome result;
  std::vector<std::int64_t> stack;
  std::size_t next_input = 0;

  for (int tok : program.tokens) {
    if (result.steps_used >= step_limit) {
      result.status = ExecStatus::kStepLimit;
      return result;
    }
    ++result.steps_used;

    if (tok >= kPush0 && tok <= kPush0 + 9) {
      stack.push_back(tok);
      continue;
    }
    switch (tok) {
      case kAdd:
      case kSub:
      case kMul:
      case kDiv:
      case kMod: {
        if (stack.size() < 2) {
          result.status = ExecStatus::kStackUnderflow;
          return result;
        }
        std::int64_t rhs = stack.back();
        stack.pop_back();
        std::int64_t lhs = stack.back();
        stack.pop_back();
        std::int64_t value = 0;
        ExecStatus err = ExecStatus::kOk;
        if (!checked_binary(tok, lhs, rhs, value, err)) {
          result.status = err;
          return result;
        }
        stack.push_back(value);
        break;
      }
      case kNeg: {
        if (stack.empty()) { result.status = ExecStatus::kStackUnderflow; return result; }
        if (stack.back() == kMinI64) { result.status = ExecStatus::kOverflow; return result; }
        stack.back() = -stack.back();
        break;
      }
      case kDup: {
        if (stack.empty()) { result.status = ExecStatus::kStackUnderflow; return result; }
        stack.push_back(stack.back());
        break;
      }
      case kSwap: {
        if (stack.size() < 2) { result.status = ExecStatus::kStackUnderflow; return result; }
        std::swap(stack[stack.size() - 1], stack[stack.size() - 2]);
        break;
      }
      case kDrop: {
        if (stack.empty()) { result.status = ExecStatus::kStackUnderflow; return result; }
        stack.pop_back();
        break;
      }
      case kIn: {
        stack.push_back(next_input < inputs.size() ? inputs[next_input] : 0);
        ++next_input;
        break;
      }
      case kOut: {
        if (stack.empty()) { result.status = ExecStatus::kStackUnderflow; return result; }
        result.outputs.push_back(stack.back());
        stack.pop_back();
        break;
      }
      case kEos: {
        result.status = ExecStatus::kOk;
        return result;
      }
      default:
        assert(false && "unknown token id");
    }
  }

  // Ran out of tokens without hitting EOS.
  result.status = ExecStatus::kTruncated;
  return result;
}

}  // namespace rlvr::lang
