//
// Copyright 2026 The PFT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef PFT_RANDOM_H_
#define PFT_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pft {

// All stochastic code draws from this engine so that results are reproducible
// for a given seed on a given standard library.
using Rng = std::mt19937_64;

// Mixes a master seed with a sequence of task coordinates (client, class,
// stream tag, ...) into an independent 64-bit seed. Order matters.
uint64_t DeriveSeed(uint64_t master, std::initializer_list<uint64_t> parts);

// Stream tags keep seeds for different stages of one task apart.
enum class SeedStream : uint64_t {
  kPartition = 1,
  kFit = 2,
  kPrivacy = 3,
  kServerSample = 4,
  kTrain = 5,
  kChainSample = 6,
  kEntropy = 7,
  kSynth = 8,
};

inline uint64_t DeriveSeed(uint64_t master, SeedStream stream,
                           std::initializer_list<uint64_t> parts = {}) {
  uint64_t seed = DeriveSeed(master, {static_cast<uint64_t>(stream)});
  return DeriveSeed(seed, parts);
}

}  // namespace pft

#endif  // PFT_RANDOM_H_
