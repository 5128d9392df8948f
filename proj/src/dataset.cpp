#include "ncs/dataset.hpp"

#include "ncs/binary_io.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ncs {

namespace {

constexpr char kStoreMagic[9] = "NCSEXP\0\0";

void write_state(std::ostream& os, const EnvState& s) {
  bin::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.aos_slots));
  bin::write_le<std::int32_t>(os, s.association);
  for (const double g : s.gains_sr) bin::write_le<double>(os, g);
  for (const double g : s.gains_rc) bin::write_le<double>(os, g);
}

EnvState read_state(std::istream& is, int num_relays) {
  EnvState s;
  s.aos_slots = static_cast<int>(bin::read_le<std::uint32_t>(is));
  s.association = bin::read_le<std::int32_t>(is);
  s.gains_sr.resize(num_relays);
  s.gains_rc.resize(num_relays);
  for (int k = 0; k < num_relays; ++k) s.gains_sr(k) = bin::read_le<double>(is);
  for (int k = 0; k < num_relays; ++k) s.gains_rc(k) = bin::read_le<double>(is);
  return s;
}

}  // namespace

std::string SourceLabel::to_string() const {
  switch (kind) {
    case SourceKind::expert:
      return "expert";
    case SourceKind::random:
      return "random";
    case SourceKind::mixed: {
      std::ostringstream os;
      os << "mixed(" << xi << ")";
      return os.str();
    }
  }
  return "unknown";
}

ExperienceStore collect(const Policy& policy, const SystemConfig& cfg, long num_steps,
                        std::uint64_t seed, SourceLabel label) {
  if (num_steps < 1) throw std::invalid_argument("collect: num_steps must be >= 1");
  NcsEnv env(cfg, split_seed(seed, "collect.env", 0));
  RngStream rng(seed, "collect.policy");
  ExperienceStore store;
  store.header.fingerprint = config_fingerprint(cfg);
  store.header.source = label;
  store.header.num_relays = static_cast<std::uint32_t>(cfg.num_relays);
  store.records.reserve(static_cast<std::size_t>(num_steps));
  for (long t = 0; t < num_steps; ++t) {
    EnvState s = env.state();
    const Action a = policy.act(s, rng);
    auto res = env.step(a);
    store.records.push_back({std::move(s), a, res.reward, std::move(res.next)});
  }
  store.header.count = store.records.size();
  return store;
}

ExperienceStore mix(const ExperienceStore& expert, const ExperienceStore& random, double xi, long total,
                    std::uint64_t seed) {
  if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("mix: xi must lie in [0, 1]");
  if (total < 0) throw std::invalid_argument("mix: total must be >= 0");
  if (expert.header.fingerprint != random.header.fingerprint) {
    throw DatasetError(DatasetErrc::fingerprint_mismatch, "mix: sources come from different configs");
  }
  // The relative nudge keeps products such as 0.29 * 100 from flooring low.
  const auto n_expert = static_cast<long>(std::floor(xi * static_cast<double>(total) * (1.0 + 1e-12)));
  const long n_random = total - n_expert;
  if (n_expert > static_cast<long>(expert.records.size()) ||
      n_random > static_cast<long>(random.records.size())) {
    throw DatasetError(DatasetErrc::insufficient_records,
                       "mix: need " + std::to_string(n_expert) + " expert and " +
                           std::to_string(n_random) + " random records, have " +
                           std::to_string(expert.records.size()) + " and " +
                           std::to_string(random.records.size()));
  }
  RngStream rng(seed, "mix");
  const auto pick = [&rng](std::size_t pool, long n) {
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (long i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(i) +
                     static_cast<std::size_t>(rng.uniform_int(static_cast<int>(pool - static_cast<std::size_t>(i))));
      std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(n));
    return idx;
  };

  ExperienceStore out;
  out.header = expert.header;
  out.header.source = {SourceKind::mixed, xi};
  out.records.reserve(static_cast<std::size_t>(total));
  for (const auto i : pick(expert.records.size(), n_expert)) out.records.push_back(expert.records[i]);
  for (const auto i : pick(random.records.size(), n_random)) out.records.push_back(random.records[i]);
  shuffle_in_place(out.records, rng);
  out.header.count = out.records.size();
  return out;
}

void write_store(std::ostream& os, const ExperienceStore& store) {
  os.write(kStoreMagic, 8);
  bin::write_le<std::uint32_t>(os, store.header.version);
  bin::write_le<std::uint64_t>(os, store.header.fingerprint);
  bin::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(store.header.source.kind));
  bin::write_le<double>(os, store.header.source.xi);
  bin::write_le<std::uint32_t>(os, store.header.num_relays);
  bin::write_le<std::uint64_t>(os, store.records.size());
  for (const auto& e : store.records) {
    write_state(os, e.state);
    bin::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.action.index()));
    bin::write_le<double>(os, e.reward);
    write_state(os, e.next_state);
  }
}

ExperienceStore read_store(std::istream& is, const SystemConfig& expected, bool force) {
  try {
    char magic[8];
    if (!is.read(magic, 8)) throw bin::Truncated();
    if (std::string_view(magic, 8) != std::string_view(kStoreMagic, 8)) {
      throw DatasetError(DatasetErrc::bad_magic, "not an experience store (bad magic)");
    }
    StoreHeader h;
    h.version = bin::read_le<std::uint32_t>(is);
    if (h.version != kStoreVersion) {
      throw DatasetError(DatasetErrc::version_mismatch,
                         "store format version " + std::to_string(h.version) + ", expected " +
                             std::to_string(kStoreVersion));
    }
    h.fingerprint = bin::read_le<std::uint64_t>(is);
    const auto kind = bin::read_le<std::uint8_t>(is);
    if (kind > 2) throw DatasetError(DatasetErrc::invalid_record, "unknown source kind");
    h.source.kind = static_cast<SourceKind>(kind);
    h.source.xi = bin::read_le<double>(is);
    h.num_relays = bin::read_le<std::uint32_t>(is);
    h.count = bin::read_le<std::uint64_t>(is);
    if (!force && h.fingerprint != config_fingerprint(expected)) {
      throw DatasetError(DatasetErrc::fingerprint_mismatch,
                         "store was generated under a different system config (use force to override)");
    }
    if (h.num_relays != static_cast<std::uint32_t>(expected.num_relays)) {
      throw DatasetError(DatasetErrc::invalid_record, "store relay count differs from config");
    }

    ExperienceStore store;
    store.header = h;
    store.records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(h.count, 1u << 22)));
    const int r = static_cast<int>(h.num_relays);
    for (std::uint64_t i = 0; i < h.count; ++i) {
      Experience e;
      e.state = read_state(is, r);
      const auto action = bin::read_le<std::uint32_t>(is);
      e.reward = bin::read_le<double>(is);
      e.next_state = read_state(is, r);
      if (action > h.num_relays || !std::isfinite(e.reward) || !validate_state(e.state, expected).empty() ||
          !validate_state(e.next_state, expected).empty()) {
        throw DatasetError(DatasetErrc::invalid_record, "invalid record " + std::to_string(i));
      }
      e.action = Action::from_index(static_cast<int>(action), r);
      store.records.push_back(std::move(e));
    }
    return store;
  } catch (const bin::Truncated&) {
    throw DatasetError(DatasetErrc::truncated, "experience store is truncated");
  }
}

std::string sidecar_text(const ExperienceStore& store) {
  std::ostringstream os;
  os << "format_version = " << store.header.version << '\n'
     << "config_fingerprint = " << std::hex << store.header.fingerprint << std::dec << '\n'
     << "source = " << store.header.source.to_string() << '\n'
     << "num_relays = " << store.header.num_relays << '\n'
     << "count = " << store.records.size() << '\n';
  return os.str();
}

void save_store(const std::string& path, const ExperienceStore& store) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DatasetError(DatasetErrc::io, "cannot write '" + path + "'");
  write_store(os, store);
  if (!os) throw DatasetError(DatasetErrc::io, "write failed for '" + path + "'");
  std::ofstream side(path + ".txt");
  side << sidecar_text(store);
}

ExperienceStore load_store(const std::string& path, const SystemConfig& expected, bool force) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DatasetError(DatasetErrc::io, "cannot open '" + path + "'");
  return read_store(is, expected, force);
}

}  // namespace ncs
