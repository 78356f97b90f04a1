#include "covert/codec.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "covert/error.hpp"

namespace covert {
namespace {

constexpr std::uint64_t kStreamPositions = 0x706f73;  // "pos"
constexpr std::uint64_t kStreamDummies = 0x64756d;    // "dum"
constexpr std::array<char, 4> kMagic = {'C', 'V', 'P', 'P'};

int alphabet_index(char c) {
  const auto pos = kAlphabet.find(c);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw FormatError("position plan file is truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace

Message::Message(std::string text) : text_(std::move(text)) {
  for (char c : text_) {
    if (alphabet_index(c) < 0) {
      throw std::invalid_argument(std::string("character '") + c + "' is not in the alphabet");
    }
  }
}

Bits encode_message(const Message& m) {
  Bits bits;
  bits.reserve(m.bit_count());
  for (char c : m.text()) {
    const int idx = alphabet_index(c);
    for (int shift = kBitsPerChar - 1; shift >= 0; --shift) {
      bits.push_back(static_cast<std::uint8_t>((idx >> shift) & 1));
    }
  }
  return bits;
}

Message decode_bits(std::span<const std::uint8_t> bits) {
  if (bits.size() % kBitsPerChar != 0) {
    throw std::invalid_argument("bit count is not a multiple of the character width");
  }
  std::string text;
  text.reserve(bits.size() / kBitsPerChar);
  for (std::size_t i = 0; i < bits.size(); i += kBitsPerChar) {
    unsigned idx = 0;
    for (unsigned j = 0; j < kBitsPerChar; ++j) idx = (idx << 1) | (bits[i + j] & 1u);
    text.push_back(kAlphabet[idx]);
  }
  return Message(std::move(text));
}

PositionPlan choose_positions(SharedRandomness rng, std::uint64_t n_pairs, double q,
                              std::span<const std::uint8_t> bits) {
  if (n_pairs < 1) throw std::invalid_argument("need at least one pair");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("send probability outside [0, 1]");
  if (bits.empty()) throw std::invalid_argument("message has no bits");
  for (auto v : bits) {
    if (v > 1) throw std::invalid_argument("bit values must be 0 or 1");
  }

  Engine eng = make_engine(derive_seed(rng.seed, kStreamPositions));
  std::binomial_distribution<std::uint64_t> count(n_pairs, q);
  const std::uint64_t d_prime = count(eng);
  if (d_prime < bits.size()) {
    throw std::runtime_error("only " + std::to_string(d_prime) + " signals drawn for " +
                             std::to_string(bits.size()) + " message bits");
  }

  // Floyd's sampling of a uniform d'-subset of [0, n_pairs).
  std::vector<std::uint64_t> chosen;
  chosen.reserve(d_prime);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(d_prime * 2);
  for (std::uint64_t j = n_pairs - d_prime; j < n_pairs; ++j) {
    const std::uint64_t t = uniform_below(eng, j + 1);
    const std::uint64_t pick = seen.insert(t).second ? t : j;
    if (pick == j) seen.insert(j);
    chosen.push_back(pick);
  }
  std::sort(chosen.begin(), chosen.end());

  PositionPlan plan;
  plan.n_pairs = n_pairs;
  plan.b = bits.size();
  plan.k_prime = d_prime / plan.b;
  plan.positions = std::move(chosen);
  plan.bit_index.resize(d_prime);
  plan.values.resize(d_prime);
  const std::uint64_t used = plan.b * plan.k_prime;
  Engine dummies = make_engine(derive_seed(rng.seed, kStreamDummies));
  for (std::uint64_t i = 0; i < d_prime; ++i) {
    if (i < used) {
      const auto bit = static_cast<std::uint32_t>(i / plan.k_prime);
      plan.bit_index[i] = bit;
      plan.values[i] = bits[bit];
    } else {
      plan.bit_index[i] = kDummyBit;
      plan.values[i] = static_cast<std::uint8_t>(dummies() >> 63);
    }
  }
  return plan;
}

DecodeResult majority_decode(const PositionPlan& plan, std::span<const ClickOutcome> clicks) {
  if (clicks.size() != plan.positions.size()) {
    throw std::invalid_argument("click outcomes do not match the position plan");
  }
  DecodeResult out;
  out.tallies.resize(plan.b);
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    const std::uint32_t bit = plan.bit_index[i];
    if (bit == kDummyBit) continue;
    BitTally& t = out.tallies[bit];
    switch (clicks[i]) {
      case ClickOutcome::kZeroBin: ++t.zeros; break;
      case ClickOutcome::kOneBin: ++t.ones; break;
      case ClickOutcome::kBoth: ++t.both; break;
      case ClickOutcome::kNone: ++t.silent; break;
    }
  }
  out.bits.resize(plan.b);
  for (std::size_t bit = 0; bit < plan.b; ++bit) {
    BitTally& t = out.tallies[bit];
    t.ambiguous = t.zeros == t.ones;
    t.decoded = t.ones > t.zeros ? 1 : 0;
    out.bits[bit] = t.decoded;
  }
  return out;
}

std::uint64_t count_bit_errors(const DecodeResult& decoded, std::span<const std::uint8_t> truth) {
  if (truth.size() != decoded.bits.size()) {
    throw std::invalid_argument("reference bits do not match the decoded length");
  }
  std::uint64_t errors = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (decoded.tallies[i].ambiguous || decoded.bits[i] != truth[i]) ++errors;
  }
  return errors;
}

void write_position_plan(const PositionPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kPositionPlanVersion);
  put_le<std::uint64_t>(out, plan.n_pairs);
  put_le<std::uint64_t>(out, plan.b);
  put_le<std::uint64_t>(out, plan.k_prime);
  put_le<std::uint64_t>(out, plan.d_prime());
  for (auto p : plan.positions) put_le<std::uint64_t>(out, p);
  for (auto b : plan.bit_index) put_le<std::uint32_t>(out, b);
  for (auto v : plan.values) put_le<std::uint8_t>(out, v);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

PositionPlan read_position_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("not a position plan file");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kPositionPlanVersion) {
    throw FormatError("unsupported position plan version " + std::to_string(version));
  }
  PositionPlan plan;
  plan.n_pairs = get_le<std::uint64_t>(in);
  plan.b = get_le<std::uint64_t>(in);
  plan.k_prime = get_le<std::uint64_t>(in);
  const auto d_prime = get_le<std::uint64_t>(in);
  if (d_prime > plan.n_pairs || plan.b == 0 || plan.b * plan.k_prime > d_prime) {
    throw FormatError("inconsistent position plan header");
  }
  plan.positions.resize(d_prime);
  plan.bit_index.resize(d_prime);
  plan.values.resize(d_prime);
  for (auto& p : plan.positions) p = get_le<std::uint64_t>(in);
  for (auto& b : plan.bit_index) b = get_le<std::uint32_t>(in);
  for (auto& v : plan.values) v = get_le<std::uint8_t>(in);
  for (std::size_t i = 0; i < d_prime; ++i) {
    if (plan.positions[i] >= plan.n_pairs || (i > 0 && plan.positions[i] <= plan.positions[i - 1])) {
      throw FormatError("positions must be strictly increasing and below n_pairs");
    }
    if (plan.values[i] > 1 || (plan.bit_index[i] != kDummyBit && plan.bit_index[i] >= plan.b)) {
      throw FormatError("invalid bit assignment at position " + std::to_string(i));
    }
  }
  return plan;
}

}  // namespace covert
