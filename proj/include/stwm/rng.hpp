#pragma once

// Counter-based random numbers: Philox4x32-10 keyed by the master seed, with
// the counter carrying (draw block, path index, mode index). Every
// (path, mode) pair owns an independent stream, so output does not depend on
// how work is split across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace stwm
{

struct SeedSpec
{
    std::uint64_t master = 0;
};

class Philox4x32
{
  public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Block generate(Block ctr, Key key)
    {
        for (int round = 0; round < 10; ++round)
        {
            ctr = single_round(ctr, key);
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }

  private:
    static Block single_round(const Block& c, const Key& k)
    {
        const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
        const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

//! Uniform in the open interval (0, 1) from 52 random bits.
inline double uniform_open(std::uint32_t hi, std::uint32_t lo)
{
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/*!
 * Stream of uniforms and standard normals for one (path, mode) pair.
 *
 * Normals come from Box-Muller on pairs of uniforms; each Philox block
 * yields two uniforms, hence two normals.
 */
class RandomStream
{
  public:
    RandomStream(SeedSpec seed, std::uint64_t path, std::uint64_t mode)
        : key_{static_cast<std::uint32_t>(seed.master),
               static_cast<std::uint32_t>(seed.master >> 32)},
          path_(static_cast<std::uint32_t>(path)),
          mode_(static_cast<std::uint32_t>(mode))
    {
        if (path > 0xFFFFFFFFu || mode > 0xFFFFFFFFu)
            throw std::out_of_range("RandomStream: path and mode indices must fit 32 bits");
    }

    double uniform()
    {
        if (uniform_pos_ == 2)
            refill_uniform();
        return uniforms_[uniform_pos_++];
    }

    double normal()
    {
        if (have_spare_)
        {
            have_spare_ = false;
            return spare_;
        }
        const auto b = next_block();
        const double u1 = uniform_open(b[0], b[1]);
        const double u2 = uniform_open(b[2], b[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

  private:
    Philox4x32::Block next_block()
    {
        const Philox4x32::Block ctr{static_cast<std::uint32_t>(block_),
                                    static_cast<std::uint32_t>(block_ >> 32), path_, mode_};
        ++block_;
        return Philox4x32::generate(ctr, key_);
    }

    void refill_uniform()
    {
        const auto b = next_block();
        uniforms_ = {uniform_open(b[0], b[1]), uniform_open(b[2], b[3])};
        uniform_pos_ = 0;
    }

    Philox4x32::Key key_;
    std::uint32_t path_;
    std::uint32_t mode_;
    std::uint64_t block_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
    std::array<double, 2> uniforms_{};
    int uniform_pos_ = 2;
};

}  // namespace stwm
