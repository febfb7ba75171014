#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "atcor/model/forecaster.hpp"

namespace atcor::model {

// Binary checkpoint (little-endian):
//   magic "ATCORCK1" | u32 version (1)
//   | u32 len, fingerprint text | u64 FNV-1a 64 of the fingerprint text
//   | u32 len, metadata text (key=value lines, informational)
//   | u32 block count
//   | per block: u32 len, name | u8 trainable | u32 rank | rank x u64 dims
//                | prod(dims) x f64 values
struct CheckpointHeader {
  std::string fingerprint;
  std::map<std::string, std::string> metadata;
};

std::uint64_t fnv1a64(const std::string& s);

void save_checkpoint(const std::filesystem::path& path, const Forecaster& model,
                     const std::map<std::string, std::string>& metadata = {});

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

// Throws FingerprintError when the stored fingerprint differs from
// model.fingerprint() or a block's name/shape disagrees; Error on a damaged
// file. Returns the header.
CheckpointHeader load_checkpoint(const std::filesystem::path& path, Forecaster& model);

// Builds the model a fingerprint describes (atcor, rnn, lstm, gru,
// persistence).
std::unique_ptr<Forecaster> make_forecaster(const std::string& fingerprint);

// make_forecaster on the stored fingerprint, then load_checkpoint.
std::unique_ptr<Forecaster> open_checkpoint(const std::filesystem::path& path, CheckpointHeader* header = nullptr);

}  // namespace atcor::model
