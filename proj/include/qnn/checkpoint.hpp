#pragma once

#include <filesystem>

#include "qnn/topology.hpp"

namespace qnn {

/// Checkpoint = `<stem>.json` (topology, quantization and a tensor index) plus
/// `<stem>.bin` (every tensor as raw little-endian float64, concatenated in
/// index order). Returns the path of the JSON document.
std::filesystem::path save_checkpoint(Model& model, const TopologySpec& topology,
                                      const QuantSpec& quant, const std::filesystem::path& stem);

struct LoadedCheckpoint {
  TopologySpec topology;
  QuantSpec quant;
  Model model;
};

/// Rebuilds the network from the JSON document and fills every tensor from
/// the blob; throws DataError on any name, shape or size mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& json_path);

}  // namespace qnn
