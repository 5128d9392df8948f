#pragma once

#include "ncs/core.hpp"
#include "ncs/env.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncs {

enum class SourceKind : std::uint8_t { expert = 0, random = 1, mixed = 2 };

struct SourceLabel {
  SourceKind kind = SourceKind::random;
  double xi = 0.0;  // expert fraction; meaningful for mixed only

  std::string to_string() const;
  friend bool operator==(const SourceLabel&, const SourceLabel&) = default;
};

inline constexpr std::uint32_t kStoreVersion = 1;

struct StoreHeader {
  std::uint32_t version = kStoreVersion;
  std::uint64_t fingerprint = 0;
  SourceLabel source;
  std::uint32_t num_relays = 0;
  std::uint64_t count = 0;

  friend bool operator==(const StoreHeader&, const StoreHeader&) = default;
};

struct ExperienceStore {
  StoreHeader header;
  std::vector<Experience> records;

  friend bool operator==(const ExperienceStore&, const ExperienceStore&) = default;
};

enum class DatasetErrc {
  io,
  bad_magic,
  version_mismatch,
  truncated,
  fingerprint_mismatch,
  invalid_record,
  insufficient_records,
};

class DatasetError : public std::runtime_error {
 public:
  DatasetError(DatasetErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  DatasetErrc code() const { return code_; }

 private:
  DatasetErrc code_;
};

// Rolls the policy from a reset environment for num_steps slots.
ExperienceStore collect(const Policy& policy, const SystemConfig& cfg, long num_steps,
                        std::uint64_t seed, SourceLabel label);

// floor(xi * total) expert records and the rest random, drawn without
// replacement and shuffled together.
ExperienceStore mix(const ExperienceStore& expert, const ExperienceStore& random, double xi, long total,
                    std::uint64_t seed);

// Layout, all little-endian: magic "NCSEXP\0\0", u32 version, u64 fingerprint,
// u8 source kind, f64 xi, u32 num_relays, u64 count, then per record
// state, u32 action, f64 reward, next state; a state is u32 aos_slots,
// i32 association (-1 = none), f64 gains_sr[R], f64 gains_rc[R].
void write_store(std::ostream& os, const ExperienceStore& store);
ExperienceStore read_store(std::istream& is, const SystemConfig& expected, bool force = false);

// Writes path and a human-readable sidecar at path + ".txt".
void save_store(const std::string& path, const ExperienceStore& store);
ExperienceStore load_store(const std::string& path, const SystemConfig& expected, bool force = false);

std::string sidecar_text(const ExperienceStore& store);

}  // namespace ncs
