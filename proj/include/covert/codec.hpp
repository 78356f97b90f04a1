#pragma once

// Message encoding, shared-randomness position selection and majority-vote
// decoding.
//
// Characters map to 5-bit indices, most significant bit first:
//   0..25 'A'..'Z', 26 '@', 27 ' ', 28 '.', 29 '!', 30 '?', 31 '-'

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "covert/random.hpp"

namespace covert {

inline constexpr unsigned kBitsPerChar = 5;
inline constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ@ .!?-";
static_assert(kAlphabet.size() == (1u << kBitsPerChar));

using Bits = std::vector<std::uint8_t>;

class Message {
 public:
  /// Throws std::invalid_argument on characters outside the alphabet.
  explicit Message(std::string text);

  const std::string& text() const noexcept { return text_; }
  std::size_t bit_count() const noexcept { return kBitsPerChar * text_.size(); }
  bool operator==(const Message&) const = default;

 private:
  std::string text_;
};

Bits encode_message(const Message& m);

/// Inverse of encode_message; throws when the length is not a multiple of 5.
Message decode_bits(std::span<const std::uint8_t> bits);

/// Seed standing in for the pre-shared random numbers. Alice and Bob derive
/// identical position plans from equal seeds.
struct SharedRandomness {
  std::uint64_t seed = 0;
};

inline constexpr std::uint32_t kDummyBit = 0xFFFFFFFFu;

/// Which pairs carry a signal and what each one encodes.
///
/// The first b * k_prime positions carry message bits in contiguous blocks of
/// k_prime (bit 0 gets the first k_prime positions); the remaining
/// d_prime - b * k_prime carry uniformly random dummy bits.
struct PositionPlan {
  std::uint64_t n_pairs = 0;
  std::uint64_t b = 0;
  std::uint64_t k_prime = 0;
  std::vector<std::uint64_t> positions;   ///< strictly increasing pair indices
  std::vector<std::uint32_t> bit_index;   ///< message bit or kDummyBit
  std::vector<std::uint8_t> values;       ///< transmitted bit per position

  std::uint64_t d_prime() const noexcept { return positions.size(); }
  bool operator==(const PositionPlan&) const = default;
};

/// Selects each of n_pairs pairs independently with probability q by drawing
/// d' ~ Binomial(n_pairs, q) and then d' distinct uniform indices (Floyd's
/// algorithm), so the work is O(d' log d') rather than O(n_pairs).
/// Throws std::runtime_error when d' < b.
PositionPlan choose_positions(SharedRandomness rng, std::uint64_t n_pairs, double q,
                              std::span<const std::uint8_t> bits);

enum class ClickOutcome : std::uint8_t { kNone = 0, kZeroBin = 1, kOneBin = 2, kBoth = 3 };

struct BitTally {
  std::uint64_t zeros = 0;
  std::uint64_t ones = 0;
  std::uint64_t both = 0;   ///< double clicks, discarded
  std::uint64_t silent = 0; ///< positions without any click
  std::uint8_t decoded = 0;
  bool ambiguous = false;   ///< tie or no vote: decoded as 0, always an error

  std::uint64_t votes() const noexcept { return zeros + ones; }
};

struct DecodeResult {
  Bits bits;
  std::vector<BitTally> tallies;

  /// Decoded text; only meaningful when the bit count is a multiple of 5.
  Message message() const { return decode_bits(bits); }
};

/// Strict majority per message bit over zero-bin vs one-bin clicks.
/// `clicks` is indexed like plan.positions.
DecodeResult majority_decode(const PositionPlan& plan, std::span<const ClickOutcome> clicks);

/// Number of message bits decoded wrongly; ambiguous bits always count.
std::uint64_t count_bit_errors(const DecodeResult& decoded, std::span<const std::uint8_t> truth);

// Versioned little-endian columnar file:
//   magic "CVPP", u32 version, u64 n_pairs, u64 b, u64 k_prime, u64 d_prime,
//   d_prime x u64 positions, d_prime x u32 bit_index, d_prime x u8 values.
inline constexpr std::uint32_t kPositionPlanVersion = 1;

void write_position_plan(const PositionPlan& plan, const std::filesystem::path& path);
PositionPlan read_position_plan(const std::filesystem::path& path);

}  // namespace covert
