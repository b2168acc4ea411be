#include "ukd/common/random.h"

namespace ukd {

std::uint64_t MixBits(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t parent, std::string_view component,
                         std::uint64_t index) {
  // FNV-1a over the component name.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : component) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return MixBits(MixBits(parent) ^ MixBits(h) ^ MixBits(index + 0x51ed27ULL));
}

std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t a,
                         std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = MixBits(parent ^ 0x2545f4914f6cdd1dULL);
  h = MixBits(h ^ a);
  h = MixBits(h ^ (b + 0x632be59bd9b4e019ULL));
  h = MixBits(h ^ (c + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

}  // namespace ukd
