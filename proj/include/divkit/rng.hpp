#pragma once

#include <cstdint>
#include <random>

namespace divkit {

/// A (seed, stream_id) pair. Equal pairs give bit-identical streams.
struct RunSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  /// Child stream for sub-task `index`; distinct indices give distinct streams.
  RunSeed derive(std::uint64_t index) const noexcept;

  friend bool operator==(const RunSeed&, const RunSeed&) = default;
};

/// Random source used everywhere in the library.
///
/// The engine is std::mt19937_64 (its output sequence is fixed by the C++
/// standard) keyed through std::seed_seq by the four 32-bit halves of
/// (seed, stream_id). The standard distributions are implementation-defined,
/// so the transforms below are written out to keep streams identical across
/// toolchains.
class Rng {
 public:
  explicit Rng(const RunSeed& seed);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, bound). Unbiased (rejection on the low product).
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via the Marsaglia polar method.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace divkit
