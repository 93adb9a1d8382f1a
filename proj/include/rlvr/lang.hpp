#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rlvr::lang {

// Token ids are dense and fixed; the order below is part of the checkpoint
// compatibility contract (see README, "Program text format").
enum TokenId : int {
  kPush0 = 0,  // PUSH_0 .. PUSH_9 occupy ids 0..9
  kAdd = 10,
  kSub = 11,
  kMul = 12,
  kDiv = 13,
  kMod = 14,
  kNeg = 15,
  kDup = 16,
  kSwap = 17,
  kDrop = 18,
  kIn = 19,
  kOut = 20,
  kEos = 21,
};

inline constexpr int kVocabSize = 22;

// Reserved context-padding id; never emitted, never appears in programs.
inline constexpr int kBosId = kVocabSize;

struct Token {
  int id;
  std::string mnemonic;
};

// The canonical fixed vocabulary, EOS last.
const std::vector<Token>& vocabulary();

// Returns the token id for a mnemonic, or -1 if unknown.
int token_from_mnemonic(std::string_view mnemonic);

const std::string& mnemonic(int token_id);

struct Program {
  std::vector<int> tokens;
  bool truncated = false;

  bool operator==(const Program&) const = default;
};

struct ParseError : std::runtime_error {
  ParseError(std::string token_name, std::size_t pos, const std::string& what)
      : std::runtime_error(what), name(std::move(token_name)), position(pos) {}
  std::string name;
  std::size_t position;
};

// Parses whitespace-separated mnemonics. truncated = false iff the source
// ends with EOS within t_max tokens. Throws ParseError on unknown mnemonics,
// on EOS appearing before the final position, and on more than t_max tokens.
Program parse_text(std::string_view source, int t_max);

// Inverse of parse_text for well-formed programs.
std::string render(const Program& program);

enum class ExecStatus {
  kOk,
  kStackUnderflow,
  kDivByZero,
  kStepLimit,
  kOverflow,
  kTruncated,
};

std::string_view exec_status_name(ExecStatus status);

struct ExecOutcome {
  ExecStatus status = ExecStatus::kOk;
  std::vector<std::int64_t> outputs;
  int steps_used = 0;
};

inline constexpr int kDefaultStepLimit = 256;

// Deterministic stack-machine evaluation. Binary ops apply
// second-popped OP first-popped. IN on exhausted input pushes 0.
// Arithmetic is checked 64-bit; overflow yields ExecStatus::kOverflow.
// Execution never throws; failures are encoded in the status.
ExecOutcome execute(const Program& program, std::span<const std::int64_t> inputs,
                    int step_limit = kDefaultStepLimit);

}  // namespace rlvr::lang
