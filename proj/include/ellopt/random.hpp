#pragma once

// Counter-based random streams. Every draw in the toolkit is addressed by a
// key (seed, purpose, iteration, index); the generator state is derived from
// the key alone, so the order in which workers consume streams never changes
// the numbers they see.

#include <array>
#include <cstdint>

namespace ellopt {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

enum class StreamPurpose : std::uint64_t {
    Gradient = 1,
    Evaluation = 2,
    Data = 3,
    DataWeights = 4,
    Sampling = 5,
    Perturbation = 6,
    Shuffle = 7,
};

struct StreamKey {
    std::uint64_t seed = 0;
    StreamPurpose purpose = StreamPurpose::Gradient;
    std::uint64_t iteration = 0;
    std::uint32_t index = 0;
};

class RandomStream {
  public:
    explicit RandomStream(const StreamKey& key);

    const StreamKey& key() const { return key_; }

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal();
    /// Uniform integer in [0, bound); bound must be positive.
    std::uint64_t uniform_index(std::uint64_t bound);

  private:
    void refill();

    StreamKey key_;
    std::array<std::uint32_t, 2> philox_key_{};
    std::uint32_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ellopt
