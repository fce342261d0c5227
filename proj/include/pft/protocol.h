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

#ifndef PFT_PROTOCOL_H_
#define PFT_PROTOCOL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "pft/gmm.h"

namespace pft {

// One fitted class-conditional mixture on its way from a client.
struct GmmMessage {
  uint32_t client_id = 0;
  uint16_t class_id = 0;
  uint32_t sample_count = 0;  // rows the mixture was fitted on
  GmmParams params;
};

// PFTG message layout, little-endian:
//   "PFTG" | u8 version=1 | u8 family | u16 K | u32 d | u32 client_id |
//   u16 class_id | u32 sample_count | u8[2] reserved        (24 bytes)
// followed, per component, by the weight, the d mean entries and the
// covariance (Full: upper triangle row by row, d(d+1)/2 entries; Diag: d
// variances; Spherical: one variance), every scalar as IEEE 754 binary16.
inline constexpr size_t kMessageHeaderBytes = 24;

// Scalars transmitted for C classes of K-component mixtures in R^d:
//   Full:      (2d + (d^2 - d)/2 + 1) K C
//   Diag:      (2d + 1) K C
//   Spherical: (d + 2) K C
int64_t ParamCount(CovarianceFamily family, int64_t d, int64_t k, int64_t c);

// Encoded size of a message; depends on (family, d, K) only.
int64_t EncodedSize(const GmmMessage& msg);

// Fails with kOutOfRange, naming the scalar index, when a parameter's
// magnitude exceeds the binary16 maximum 65504.
absl::StatusOr<std::vector<uint8_t>> Encode(const GmmMessage& msg);

// Inverse of Encode. Weights are renormalized to sum to one after
// dequantization.
absl::StatusOr<GmmMessage> Decode(std::span<const uint8_t> bytes);

// Batch transfer artifact: u32 count, then per message a u32 length followed
// by that many bytes.
absl::StatusOr<std::vector<uint8_t>> EncodeBatch(
    const std::vector<GmmMessage>& messages);
absl::StatusOr<std::vector<GmmMessage>> DecodeBatch(
    std::span<const uint8_t> bytes);
absl::Status WriteBatchFile(const std::string& path,
                            const std::vector<GmmMessage>& messages);
absl::StatusOr<std::vector<GmmMessage>> ReadBatchFile(const std::string& path);

struct ClientComm {
  uint32_t client_id = 0;
  int64_t messages = 0;
  int64_t scalars = 0;
  int64_t bytes = 0;
};

struct CommReport {
  std::vector<ClientComm> clients;  // ascending client_id
  int64_t total_messages = 0;
  int64_t total_scalars = 0;
  int64_t total_bytes = 0;
};

CommReport Account(const std::vector<GmmMessage>& messages);

}  // namespace pft

#endif  // PFT_PROTOCOL_H_
