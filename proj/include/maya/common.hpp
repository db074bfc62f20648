#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace maya {

// Every failure carries a short machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Derive an independent stream seed from a parent seed and a list of tags.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

// Uniform value in [-1, 1] that depends only on (seed, index).
double hashed_unit(std::uint64_t seed, std::uint64_t index);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace maya
