#include "doctest.h"

#include "ncs/agents.hpp"
#include "ncs/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace ncs;

namespace {

ExperienceStore random_store(const SystemConfig& cfg, long n, std::uint64_t seed, SourceKind kind) {
  return collect(RandomPolicy(cfg.num_actions()), cfg, n, seed, {kind, kind == SourceKind::expert ? 1.0 : 0.0});
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("collect") {
    SystemConfig cfg;
    const auto store = random_store(cfg, 1000, 1, SourceKind::random);
    CHECK(store.records.size() == 1000);
    CHECK(store.header.count == 1000);
    CHECK(store.header.fingerprint == config_fingerprint(cfg));
    for (const auto& e : store.records) CHECK(e.reward <= 0.0);
    CHECK(store == random_store(cfg, 1000, 1, SourceKind::random));
    for (std::size_t i = 1; i < store.records.size(); ++i) {
      CHECK(store.records[i].state == store.records[i - 1].next_state);
    }
  }

  TEST_CASE("random store action histogram within 4 sigma") {
    SystemConfig cfg;
    const long n = 60000;
    const auto store = random_store(cfg, n, 2, SourceKind::random);
    std::vector<long> hist(6, 0);
    for (const auto& e : store.records) ++hist[static_cast<std::size_t>(e.action.index())];
    const double p = 1.0 / 6;
    for (const long h : hist) CHECK(std::abs(h - n * p) < 4.0 * std::sqrt(n * p * (1 - p)));
  }

  TEST_CASE("mix sizes, labels and errors") {
    SystemConfig cfg;
    const auto expert = random_store(cfg, 12000, 3, SourceKind::expert);
    const auto random = random_store(cfg, 12000, 4, SourceKind::random);
    for (const double xi : {0.0, 0.05, 0.25, 1.0}) {
      const auto m = mix(expert, random, xi, 10000, 5);
      CHECK(m.records.size() == 10000);
      CHECK(m.header.source.kind == SourceKind::mixed);
      CHECK(m.header.source.xi == xi);
    }
    CHECK(mix(expert, random, 0.05, 10000, 5) == mix(expert, random, 0.05, 10000, 5));
    CHECK_THROWS_AS(mix(expert, random, 0.5, 30000, 5), DatasetError);
    CHECK_THROWS_AS(mix(expert, random, 1.5, 100, 5), std::invalid_argument);
    SystemConfig other;
    other.num_irs_elements = 75;
    const auto foreign = random_store(other, 100, 6, SourceKind::random);
    try {
      mix(expert, foreign, 0.5, 50, 1);
      FAIL("mix accepted mismatched sources");
    } catch (const DatasetError& e) {
      CHECK(e.code() == DatasetErrc::fingerprint_mismatch);
    }
  }

  TEST_CASE("exact expert share") {
    SystemConfig cfg;
    auto expert = random_store(cfg, 600, 7, SourceKind::expert);
    auto random = random_store(cfg, 10000, 8, SourceKind::random);
    for (auto& e : expert.records) e.reward = -1e6;  // tag
    const auto m = mix(expert, random, 0.05, 10000, 9);
    long tagged = 0;
    for (const auto& e : m.records) tagged += e.reward == -1e6;
    CHECK(tagged == 500);
    CHECK(mix(expert, random, 0.0, 10000, 9).records.size() == 10000);
  }

  TEST_CASE("binary round trip") {
    SystemConfig cfg;
    const auto store = random_store(cfg, 500, 10, SourceKind::random);
    std::stringstream buf;
    write_store(buf, store);
    CHECK(read_store(buf, cfg) == store);
  }

  TEST_CASE("typed load errors") {
    SystemConfig cfg;
    const auto store = random_store(cfg, 50, 11, SourceKind::random);
    std::stringstream buf;
    write_store(buf, store);
    const std::string bytes = buf.str();

    const auto code_of = [&](const std::string& data, const SystemConfig& expected, bool force = false) {
      std::stringstream in(data);
      try {
        read_store(in, expected, force);
      } catch (const DatasetError& e) {
        return static_cast<int>(e.code());
      }
      return -1;
    };
    CHECK(code_of(bytes.substr(0, bytes.size() - 3), cfg) == static_cast<int>(DatasetErrc::truncated));
    CHECK(code_of(bytes.substr(0, 20), cfg) == static_cast<int>(DatasetErrc::truncated));
    CHECK(code_of("garbage-garbage-garbage", cfg) == static_cast<int>(DatasetErrc::bad_magic));
    std::string versioned = bytes;
    versioned[8] = 9;
    CHECK(code_of(versioned, cfg) == static_cast<int>(DatasetErrc::version_mismatch));

    SystemConfig other = cfg;
    other.beta = 0.9;
    CHECK(code_of(bytes, other) == static_cast<int>(DatasetErrc::fingerprint_mismatch));
    CHECK(code_of(bytes, other, true) == -1);
  }

  TEST_CASE("files and sidecar") {
    SystemConfig cfg;
    const auto store = random_store(cfg, 20, 12, SourceKind::random);
    const auto dir = std::filesystem::temp_directory_path() / "ncs_dataset_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "r.exp").string();
    save_store(path, store);
    CHECK(load_store(path, cfg) == store);
    CHECK(std::filesystem::exists(path + ".txt"));
    CHECK(sidecar_text(store).find("count = 20") != std::string::npos);
    try {
      load_store((dir / "missing.exp").string(), cfg);
      FAIL("missing file loaded");
    } catch (const DatasetError& e) {
      CHECK(e.code() == DatasetErrc::io);
    }
    std::filesystem::remove_all(dir);
  }
}
