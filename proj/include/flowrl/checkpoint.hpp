#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "flowrl/net.hpp"

namespace flowrl {

// A trained policy plus enough metadata to resume or audit it. Floats are
// persisted as hex strings so save/load round-trips bit-exactly.
struct Checkpoint {
    ParamVector params;
    std::optional<AdamState> optimizer;
    std::string stage;                    // pretrain | grpo | dpo | sft
    std::uint64_t config_fingerprint = 0;
    std::string created;                  // empty in deterministic mode
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Load and require an architecture; mismatch names both specs.
Checkpoint load_checkpoint(const std::string& path, const NetSpec& expected);

}  // namespace flowrl
