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

#include "pft/protocol.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include <Eigen/Core>

#include "absl/strings/str_cat.h"

namespace pft {
namespace {

static_assert(std::endian::native == std::endian::little,
              "PFTG codec assumes a little-endian host");

constexpr char kMagic[4] = {'P', 'F', 'T', 'G'};
constexpr uint8_t kVersion = 1;
constexpr double kHalfMax = 65504.0;

template <typename T>
void Put(std::vector<uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T Get(const uint8_t* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

int64_t ComponentScalars(CovarianceFamily family, int64_t d) {
  switch (family) {
    case CovarianceFamily::kFull:
      return 1 + d + d * (d + 1) / 2;
    case CovarianceFamily::kDiag:
      return 1 + 2 * d;
    case CovarianceFamily::kSpherical:
      return d + 2;
  }
  return 0;
}

uint16_t ToHalfBits(double v) {
  return Eigen::numext::bit_cast<uint16_t>(
      Eigen::half(static_cast<float>(v)));
}

double FromHalfBits(uint16_t bits) {
  return static_cast<double>(static_cast<float>(
      Eigen::half(Eigen::half_impl::raw_uint16_to_half(bits))));
}

// Parameters in wire order.
std::vector<double> FlattenParams(const GmmParams& p) {
  const int d = p.dim();
  std::vector<double> out;
  out.reserve(p.num_components() * ComponentScalars(p.family, d));
  for (int k = 0; k < p.num_components(); ++k) {
    out.push_back(p.weights(k));
    for (int j = 0; j < d; ++j) out.push_back(p.means(k, j));
    switch (p.family) {
      case CovarianceFamily::kFull:
        for (int r = 0; r < d; ++r) {
          for (int c = r; c < d; ++c) out.push_back(p.full_covariances[k](r, c));
        }
        break;
      case CovarianceFamily::kDiag:
        for (int j = 0; j < d; ++j) out.push_back(p.diag_covariances(k, j));
        break;
      case CovarianceFamily::kSpherical:
        out.push_back(p.spherical_covariances(k));
        break;
    }
  }
  return out;
}

}  // namespace

int64_t ParamCount(CovarianceFamily family, int64_t d, int64_t k, int64_t c) {
  switch (family) {
    case CovarianceFamily::kFull:
      return (2 * d + (d * d - d) / 2 + 1) * k * c;
    case CovarianceFamily::kDiag:
      return (2 * d + 1) * k * c;
    case CovarianceFamily::kSpherical:
      return (d + 2) * k * c;
  }
  return 0;
}

int64_t EncodedSize(const GmmMessage& msg) {
  return static_cast<int64_t>(kMessageHeaderBytes) +
         2 * ParamCount(msg.params.family, msg.params.dim(),
                        msg.params.num_components(), 1);
}

absl::StatusOr<std::vector<uint8_t>> Encode(const GmmMessage& msg) {
  const GmmParams& p = msg.params;
  if (absl::Status s = p.Validate(); !s.ok()) return s;
  if (p.num_components() > 0xffff) {
    return absl::InvalidArgumentError("K does not fit the u16 header field");
  }
  const std::vector<double> scalars = FlattenParams(p);
  std::vector<uint8_t> out;
  out.reserve(kMessageHeaderBytes + 2 * scalars.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  Put<uint8_t>(out, kVersion);
  Put<uint8_t>(out, static_cast<uint8_t>(p.family));
  Put<uint16_t>(out, static_cast<uint16_t>(p.num_components()));
  Put<uint32_t>(out, static_cast<uint32_t>(p.dim()));
  Put<uint32_t>(out, msg.client_id);
  Put<uint16_t>(out, msg.class_id);
  Put<uint32_t>(out, msg.sample_count);
  Put<uint16_t>(out, 0);
  for (size_t i = 0; i < scalars.size(); ++i) {
    if (std::abs(scalars[i]) > kHalfMax) {
      return absl::OutOfRangeError(absl::StrCat(
          "parameter ", i, " = ", scalars[i], " overflows binary16"));
    }
    Put<uint16_t>(out, ToHalfBits(scalars[i]));
  }
  return out;
}

absl::StatusOr<GmmMessage> Decode(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    return absl::InvalidArgumentError("not a PFTG message (bad magic)");
  }
  if (bytes.size() < kMessageHeaderBytes) {
    return absl::DataLossError("PFTG header truncated");
  }
  if (bytes[4] != kVersion) {
    return absl::UnimplementedError(
        absl::StrCat("unsupported PFTG version ", bytes[4]));
  }
  if (bytes[5] > 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown covariance family ", bytes[5]));
  }
  const auto family = static_cast<CovarianceFamily>(bytes[5]);
  const int k_count = Get<uint16_t>(&bytes[6]);
  const int64_t d = Get<uint32_t>(&bytes[8]);
  if (k_count < 1 || d < 1) {
    return absl::InvalidArgumentError("PFTG header declares K = 0 or d = 0");
  }
  GmmMessage msg;
  msg.client_id = Get<uint32_t>(&bytes[12]);
  msg.class_id = Get<uint16_t>(&bytes[16]);
  msg.sample_count = Get<uint32_t>(&bytes[18]);

  const int64_t scalars = ParamCount(family, d, k_count, 1);
  const uint64_t expected = kMessageHeaderBytes + 2 * scalars;
  if (bytes.size() != expected) {
    return absl::DataLossError(absl::StrCat("PFTG length ", bytes.size(),
                                            " inconsistent with header (",
                                            expected, " expected)"));
  }
  const uint8_t* p = bytes.data() + kMessageHeaderBytes;
  int64_t index = 0;
  auto next = [&]() -> absl::StatusOr<double> {
    const double v = FromHalfBits(Get<uint16_t>(p));
    p += 2;
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError(
          absl::StrCat("PFTG parameter ", index, " is not finite"));
    }
    ++index;
    return v;
  };

  GmmParams& g = msg.params;
  g.family = family;
  g.weights.resize(k_count);
  g.means.resize(k_count, d);
  switch (family) {
    case CovarianceFamily::kFull:
      g.full_covariances.assign(k_count, SquareMatrix::Zero(d, d));
      break;
    case CovarianceFamily::kDiag:
      g.diag_covariances.resize(k_count, d);
      break;
    case CovarianceFamily::kSpherical:
      g.spherical_covariances.resize(k_count);
      break;
  }
  for (int k = 0; k < k_count; ++k) {
    absl::StatusOr<double> v = next();
    if (!v.ok()) return v.status();
    g.weights(k) = *v;
    for (int64_t j = 0; j < d; ++j) {
      if (!(v = next()).ok()) return v.status();
      g.means(k, j) = *v;
    }
    switch (family) {
      case CovarianceFamily::kFull:
        for (int64_t r = 0; r < d; ++r) {
          for (int64_t c = r; c < d; ++c) {
            if (!(v = next()).ok()) return v.status();
            g.full_covariances[k](r, c) = g.full_covariances[k](c, r) = *v;
          }
        }
        break;
      case CovarianceFamily::kDiag:
        for (int64_t j = 0; j < d; ++j) {
          if (!(v = next()).ok()) return v.status();
          g.diag_covariances(k, j) = *v;
        }
        break;
      case CovarianceFamily::kSpherical:
        if (!(v = next()).ok()) return v.status();
        g.spherical_covariances(k) = *v;
        break;
    }
  }
  if ((g.weights.array() < 0).any() || !(g.weights.sum() > 0)) {
    return absl::InvalidArgumentError("PFTG weights are invalid");
  }
  g.weights /= g.weights.sum();
  return msg;
}

absl::StatusOr<std::vector<uint8_t>> EncodeBatch(
    const std::vector<GmmMessage>& messages) {
  std::vector<uint8_t> out;
  Put<uint32_t>(out, static_cast<uint32_t>(messages.size()));
  for (const GmmMessage& m : messages) {
    absl::StatusOr<std::vector<uint8_t>> bytes = Encode(m);
    if (!bytes.ok()) return bytes.status();
    Put<uint32_t>(out, static_cast<uint32_t>(bytes->size()));
    out.insert(out.end(), bytes->begin(), bytes->end());
  }
  return out;
}

absl::StatusOr<std::vector<GmmMessage>> DecodeBatch(
    std::span<const uint8_t> bytes) {
  if (bytes.size() < 4) return absl::DataLossError("batch header truncated");
  const uint32_t count = Get<uint32_t>(bytes.data());
  size_t pos = 4;
  std::vector<GmmMessage> out;
  for (uint32_t i = 0; i < count; ++i) {
    if (bytes.size() - pos < 4) {
      return absl::DataLossError(absl::StrCat("batch truncated at message ", i));
    }
    const uint32_t len = Get<uint32_t>(bytes.data() + pos);
    pos += 4;
    if (bytes.size() - pos < len) {
      return absl::DataLossError(absl::StrCat("batch truncated in message ", i));
    }
    absl::StatusOr<GmmMessage> msg = Decode(bytes.subspan(pos, len));
    if (!msg.ok()) return msg.status();
    out.push_back(*std::move(msg));
    pos += len;
  }
  if (pos != bytes.size()) {
    return absl::DataLossError("batch has trailing bytes");
  }
  return out;
}

absl::Status WriteBatchFile(const std::string& path,
                            const std::vector<GmmMessage>& messages) {
  absl::StatusOr<std::vector<uint8_t>> bytes = EncodeBatch(messages);
  if (!bytes.ok()) return bytes.status();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out.write(reinterpret_cast<const char*>(bytes->data()),
            static_cast<std::streamsize>(bytes->size()));
  return out ? absl::OkStatus()
             : absl::UnavailableError(absl::StrCat("write failed: ", path));
}

absl::StatusOr<std::vector<GmmMessage>> ReadBatchFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return DecodeBatch(bytes);
}

CommReport Account(const std::vector<GmmMessage>& messages) {
  std::map<uint32_t, ClientComm> per_client;
  CommReport report;
  for (const GmmMessage& m : messages) {
    const int64_t scalars = ParamCount(m.params.family, m.params.dim(),
                                       m.params.num_components(), 1);
    ClientComm& c = per_client[m.client_id];
    c.client_id = m.client_id;
    ++c.messages;
    c.scalars += scalars;
    c.bytes += EncodedSize(m);
  }
  for (const auto& [id, c] : per_client) {
    report.clients.push_back(c);
    report.total_messages += c.messages;
    report.total_scalars += c.scalars;
    report.total_bytes += c.bytes;
  }
  return report;
}

}  // namespace pft
